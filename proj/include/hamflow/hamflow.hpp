#pragma once

#include "hamflow/errors.hpp"
#include "hamflow/matrix.hpp"
#include "hamflow/matlib.hpp"
#include "hamflow/systems.hpp"
#include "hamflow/odeflow.hpp"
#include "hamflow/boundary.hpp"
#include "hamflow/sflow.hpp"
#include "hamflow/toruscan.hpp"
#include "hamflow/random.hpp"
