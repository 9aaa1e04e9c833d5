#pragma once

#include "ggmlearn/errors.hpp"
#include "ggmlearn/evalbench.hpp"
#include "ggmlearn/generators.hpp"
#include "ggmlearn/json_io.hpp"
#include "ggmlearn/learners.hpp"
#include "ggmlearn/matrix.hpp"
#include "ggmlearn/model.hpp"
#include "ggmlearn/oracles.hpp"
#include "ggmlearn/parallel.hpp"
#include "ggmlearn/regress.hpp"
#include "ggmlearn/rng.hpp"
#include "ggmlearn/sampler.hpp"
