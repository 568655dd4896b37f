#pragma once

// Umbrella header: test-time adversarial defense for cosine-similarity
// image-text classifiers. Pointwise-entropy prompt tuning over augmented
// views, reliability-weighted ensembling, the L-inf attack suite used to
// probe it, and the evaluation harness around both.

#include "rtpt/adam.hpp"
#include "rtpt/attack.hpp"
#include "rtpt/attack_cache.hpp"
#include "rtpt/augment.hpp"
#include "rtpt/backend.hpp"
#include "rtpt/backend_dense.hpp"
#include "rtpt/classifier.hpp"
#include "rtpt/config.hpp"
#include "rtpt/dataset.hpp"
#include "rtpt/entropy.hpp"
#include "rtpt/errors.hpp"
#include "rtpt/eval.hpp"
#include "rtpt/grad.hpp"
#include "rtpt/image.hpp"
#include "rtpt/inference.hpp"
#include "rtpt/metrics.hpp"
#include "rtpt/parallel.hpp"
#include "rtpt/plot.hpp"
#include "rtpt/prompt.hpp"
#include "rtpt/reliability.hpp"
#include "rtpt/report.hpp"
#include "rtpt/rng.hpp"
#include "rtpt/serialize.hpp"
