#pragma once

#include "completion.hpp"
#include "contraction_completion.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "matrix_estimation.hpp"
#include "mode_projection.hpp"
#include "random.hpp"
#include "random_models.hpp"
#include "tensor.hpp"
#include "unfold_completion.hpp"
