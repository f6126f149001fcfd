#pragma once

// DeepHazard: survival prediction with sequential per-interval neural networks
// under an additive hazards model with time-varying covariates.

#include "deephazard/activation.hpp"
#include "deephazard/cli.hpp"
#include "deephazard/data.hpp"
#include "deephazard/io.hpp"
#include "deephazard/loss.hpp"
#include "deephazard/metrics.hpp"
#include "deephazard/network.hpp"
#include "deephazard/optimizer.hpp"
#include "deephazard/predict.hpp"
#include "deephazard/presets.hpp"
#include "deephazard/rng.hpp"
#include "deephazard/simulate.hpp"
#include "deephazard/step_function.hpp"
#include "deephazard/train.hpp"
