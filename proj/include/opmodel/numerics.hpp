#pragma once

#include "opmodel/numerics/linalg.hpp"
#include "opmodel/numerics/matrix.hpp"
#include "opmodel/numerics/matrix_json.hpp"
#include "opmodel/numerics/random.hpp"
