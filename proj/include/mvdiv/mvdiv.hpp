#pragma once

// Convenience umbrella: the whole library.
#include "mvdiv/divergences.hpp"
#include "mvdiv/empirical.hpp"
#include "mvdiv/errors.hpp"
#include "mvdiv/io.hpp"
#include "mvdiv/pair_scores.hpp"
#include "mvdiv/spectral.hpp"
#include "mvdiv/two_sample.hpp"
