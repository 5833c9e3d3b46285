#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "mvdiv/mvdiv.hpp"

using mvdiv::Index;
using mvdiv::Matrixd;
using mvdiv::Vectord;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string err_path =
      "/tmp/mvdiv_cli_err_" + std::to_string(++counter) + ".txt";
  const std::string cmd =
      std::string(MVDIV_CLI_PATH) + " " + args + " 2>" + err_path;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream err_in(err_path, std::ios::binary);
  r.err.assign(std::istreambuf_iterator<char>(err_in), {});
  return r;
}

std::string error_kind(const CliResult& r) {
  return nlohmann::json::parse(r.err)["error"]["kind"].get<std::string>();
}

std::string write_file(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/mvdiv_cli_" + name;
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
  return path;
}

std::string csv_of(const Matrixd& m, const std::string& label = "") {
  std::string text;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) text += ',';
      text += mvdiv::format_double(m(i, j));
    }
    if (!label.empty()) {
      text += ',';
      text += label;
    }
    text += '\n';
  }
  return text;
}

struct Fixture {
  mvdiv::Sampled x{Matrixd::Zero(1, 1)};
  mvdiv::Sampled y{Matrixd::Zero(1, 1)};
  std::string x_csv, y_csv, x_json, y_json, combined_csv;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Matrixd cx(3, 3), cy(3, 3);
    cx << 1.5, 0.2, 0.0, 0.2, 1.0, -0.1, 0.0, -0.1, 0.8;
    cy << 2.5, -0.3, 0.1, -0.3, 1.2, 0.0, 0.1, 0.0, 1.6;
    const mvdiv::GaussianSummaryd gx{Vectord{{0.2, -0.1, 0.4}},
                                     mvdiv::SymMatrixd(cx)};
    const mvdiv::GaussianSummaryd gy{Vectord{{0.0, 0.3, 0.0}},
                                     mvdiv::SymMatrixd(cy)};
    auto rng_x = mvdiv::make_stream(3001, 99, 0);
    auto rng_y = mvdiv::make_stream(3002, 99, 0);
    Fixture f;
    f.x = mvdiv::GaussianSampler<double>(gx).draw(rng_x, 40);
    f.y = mvdiv::GaussianSampler<double>(gy).draw(rng_y, 40);
    f.x_csv = write_file("x.csv", csv_of(f.x.data));
    f.y_csv = write_file("y.csv", csv_of(f.y.data));
    f.x_json = "/tmp/mvdiv_cli_x.json";
    f.y_json = "/tmp/mvdiv_cli_y.json";
    mvdiv::write_summary_json(f.x_json, mvdiv::sample_moments(f.x));
    mvdiv::write_summary_json(f.y_json, mvdiv::sample_moments(f.y));
    f.combined_csv = write_file(
        "combined.csv", csv_of(f.x.data, "a") + csv_of(f.y.data, "b"));
    return f;
  }();
  return f;
}

std::string xy(const Fixture& f) {
  return " --x " + f.x_csv + " --y " + f.y_csv + " ";
}

}  // namespace

TEST_CASE("cli: --help exits cleanly") {
  const auto r = run_cli("--help");
  CHECK(r.code == 0);
  CHECK(r.out.find("mvdiv") != std::string::npos);
}

TEST_CASE("cli: dist matches the library computation") {
  const auto& f = fixture();
  const auto gx = mvdiv::sample_moments(f.x);
  const auto gy = mvdiv::sample_moments(f.y);

  const auto check_family = [&](const std::string& flags,
                                const mvdiv::DistanceSpec& spec) {
    const auto r = run_cli("dist" + xy(f) + flags);
    CAPTURE(flags);
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["value"].get<double>() == mvdiv::evaluate<double>(spec, gx, gy));
    CHECK(j["distance"]["label"] == spec.describe());
  };
  check_family("--family kl", mvdiv::DistanceSpec::kl());
  check_family("--family js", mvdiv::DistanceSpec::js());
  check_family("--family bhattacharyya", mvdiv::DistanceSpec::bhattacharyya());
  check_family("--family logphik-jb --k 2",
               mvdiv::DistanceSpec::log_simplicial_jb(2));
  check_family("--family logphip-br --p 0.5",
               mvdiv::DistanceSpec::log_phi_p_br(0.5));

  const auto r_energy =
      run_cli("dist" + xy(f) + "--family energy --delta 1.5");
  REQUIRE(r_energy.code == 0);
  CHECK(nlohmann::json::parse(r_energy.out)["value"].get<double>() ==
        mvdiv::energy_distance(f.x, f.y, 1.5));

  SUBCASE("--out mirrors stdout") {
    const std::string out_path = "/tmp/mvdiv_cli_dist_out.json";
    const auto r = run_cli("dist" + xy(f) + "--family kl --out " + out_path);
    REQUIRE(r.code == 0);
    std::ifstream in(out_path, std::ios::binary);
    const std::string file_text{std::istreambuf_iterator<char>(in), {}};
    CHECK(file_text == r.out);
  }
}

TEST_CASE("cli: summary JSON inputs behave like the CSV they summarize") {
  const auto& f = fixture();
  const auto from_csv = run_cli("dist" + xy(f) + "--family js");
  const auto from_json = run_cli("dist --x " + f.x_json + " --y " + f.y_json +
                                 " --family js");
  REQUIRE(from_csv.code == 0);
  REQUIRE(from_json.code == 0);
  CHECK(nlohmann::json::parse(from_csv.out)["value"] ==
        nlohmann::json::parse(from_json.out)["value"]);

  SUBCASE("the logphi-p alias at p = 0 scales KL by 2/d") {
    const auto kl = run_cli("dist" + xy(f) + "--family kl");
    const auto jb0 = run_cli("dist" + xy(f) + "--family logphi-p --p 0");
    REQUIRE(jb0.code == 0);
    const double kl_value = nlohmann::json::parse(kl.out)["value"];
    const double jb_value = nlohmann::json::parse(jb0.out)["value"];
    CHECK(jb_value ==
          doctest::Approx((2.0 / 3.0) * kl_value).epsilon(1e-12));
  }
  SUBCASE("energy needs raw observations") {
    const auto r = run_cli("dist --x " + f.x_json + " --y " + f.y_json +
                           " --family energy");
    CHECK(r.code == 2);
    CHECK(error_kind(r) == "validation");
  }
}

TEST_CASE("cli: invalid input and parameters exit with code 2") {
  const auto& f = fixture();
  const auto missing =
      run_cli("dist --x /tmp/mvdiv_cli_nope.csv --y " + f.y_csv +
              " --family kl");
  CHECK(missing.code == 2);
  CHECK(error_kind(missing) == "validation");

  CHECK(run_cli("dist" + xy(f) + "--family mahalanobis").code == 2);
  CHECK(run_cli("dist" + xy(f) + "--family logphip-jb --p 1.5").code == 2);
  CHECK(run_cli("dist" + xy(f) + "--family logphip-jb").code == 2);
  CHECK(run_cli("dist" + xy(f) + "--family logphik-jb --k 7").code == 2);
  CHECK(run_cli("dist" + xy(f) + "--family kl --delimiter ab").code == 2);
  CHECK(run_cli("dist" + xy(f) + "--family kl --x-label a").code == 2);
  CHECK(run_cli("dist" + xy(f) + "--family kl --bogus-flag").code == 2);
  CHECK(run_cli("test" + xy(f) + "--family kl --grid default --seed 1").code ==
        2);
  CHECK(run_cli("simulate --example 2 --param 0.5 --n 30 --d 3 --reps 1 "
                "--families kl --seed 5")
            .code == 2);
}

TEST_CASE("cli: numerical failures exit with code 3") {
  std::string rows;
  for (int i = 0; i < 30; ++i) rows += "1,2\n";
  const std::string constant = write_file("constant.csv", rows);
  const auto r = run_cli("dist --x " + constant + " --y " + constant +
                         " --family kl");
  CHECK(r.code == 3);
  CHECK(error_kind(r) == "numerical");
}

TEST_CASE("cli: infeasible grids exit with code 4") {
  const auto& f = fixture();
  const auto r = run_cli("select" + xy(f) +
                         "--family logphik-br --grid 9,11 --seed 3");
  CHECK(r.code == 4);
  CHECK(error_kind(r) == "infeasible");
}

TEST_CASE("cli: class columns select labeled groups") {
  const auto& f = fixture();
  const auto split = run_cli("dist" + xy(f) + "--family kl");
  const auto merged = run_cli("dist --x " + f.combined_csv + " --y " +
                              f.combined_csv +
                              " --class-column 3 --x-label a --y-label b "
                              "--family kl");
  REQUIRE(merged.code == 0);
  CHECK(nlohmann::json::parse(merged.out)["value"] ==
        nlohmann::json::parse(split.out)["value"]);

  const auto ambiguous = run_cli("dist --x " + f.combined_csv + " --y " +
                                 f.combined_csv +
                                 " --class-column 3 --x-label a --family kl");
  CHECK(ambiguous.code == 2);
  CHECK(ambiguous.err.find("available") != std::string::npos);

  const auto unknown = run_cli("dist --x " + f.combined_csv + " --y " +
                               f.combined_csv +
                               " --class-column 3 --x-label a --y-label zz "
                               "--family kl");
  CHECK(unknown.code == 2);
}

TEST_CASE("cli: tab-delimited input") {
  const std::string xt = write_file("x.tsv", "0\t0\n1\t0\n0\t1\n2\t2\n");
  const std::string yt = write_file("y.tsv", "3\t3\n4\t3\n3\t4\n5\t5\n");
  const auto r = run_cli("dist --x " + xt + " --y " + yt +
                         " --delimiter tab --family energy --delta 1");
  REQUIRE(r.code == 0);
  Matrixd mx(4, 2), my(4, 2);
  mx << 0, 0, 1, 0, 0, 1, 2, 2;
  my << 3, 3, 4, 3, 3, 4, 5, 5;
  const double expected = mvdiv::energy_distance(
      mvdiv::Sampled(mx), mvdiv::Sampled(my), 1.0);
  CHECK(nlohmann::json::parse(r.out)["value"].get<double>() == expected);
}

TEST_CASE("cli: roc reports the AUC and writes the curve") {
  const auto& f = fixture();
  const std::string roc_path = "/tmp/mvdiv_cli_roc.csv";
  const auto r = run_cli("roc" + xy(f) +
                         "--family js --scheme subsample --r 2 --N 12 "
                         "--seed 7 --out " +
                         roc_path);
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  const double auc = j["auc"];
  CHECK(auc >= 0.0);
  CHECK(auc <= 1.0);
  CHECK(j["points"].get<int>() >= 2);

  std::ifstream in(roc_path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "threshold,fpr,tpr");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == j["points"].get<int>());
}

TEST_CASE("cli: the test subcommand reports a calibrated decision") {
  const auto& f = fixture();
  const auto fixed = run_cli("test" + xy(f) +
                             "--family kl --scheme subsample --r 3 --seed 11");
  CAPTURE(fixed.err);
  REQUIRE(fixed.code == 0);
  const auto j = nlohmann::json::parse(fixed.out);
  CHECK(j["statistic"].is_number());
  CHECK(j["tau"].is_number());
  CHECK(j["reject"].is_boolean());
  CHECK(j["n_effective"] == 37);
  CHECK(j["m_effective"] == 37);
  CHECK_FALSE(j.contains("selected_param"));

  const auto grid = run_cli("test" + xy(f) +
                            "--family logphik-br --grid default --seed 11");
  CAPTURE(grid.err);
  REQUIRE(grid.code == 0);
  const auto g = nlohmann::json::parse(grid.out);
  REQUIRE(g.contains("selected_param"));
  REQUIRE(g["auc_by_param"].size() == 3);
  const double best = g["selected_param"];
  CHECK(best >= 1.0);
  CHECK(best <= 3.0);
  CHECK(g["distance"]["parameter"] == best);
}

TEST_CASE("cli: output is byte-identical across reruns and thread counts") {
  const auto& f = fixture();
  const std::string args =
      "select" + xy(f) + "--family logphik-br --seed 17";
  const auto a = run_cli("--threads 1 " + args);
  const auto b = run_cli("--threads 1 " + args);
  const auto c = run_cli("--threads 3 " + args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  CHECK(nlohmann::json::parse(a.out)["table"].size() == 3);

  const std::string sim =
      "simulate --example 2 --param 0.7 --n 30 --d 3 --reps 10 "
      "--families kl,logphik-jb:2 --seed 5";
  const auto s1 = run_cli("--threads 1 " + sim);
  const auto s2 = run_cli("--threads 2 " + sim);
  CAPTURE(s1.err);
  REQUIRE(s1.code == 0);
  CHECK(s1.out == s2.out);
  const auto js = nlohmann::json::parse(s1.out);
  REQUIRE(js["results"].size() == 2);
  for (const auto& row : js["results"]) {
    const double auc = row["auc"];
    CHECK(auc >= 0.0);
    CHECK(auc <= 1.0);
  }
  CHECK(js["results"][1]["distance"]["family"] == "logphik-jb");
}
