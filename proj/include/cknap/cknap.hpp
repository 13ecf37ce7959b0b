#pragma once

#include "cknap/int_matrix.hpp"
#include "cknap/smith.hpp"
#include "cknap/lll.hpp"
#include "cknap/babai.hpp"
#include "cknap/embedding.hpp"
#include "cknap/xof.hpp"
#include "cknap/solution_space.hpp"
#include "cknap/attacks.hpp"
#include "cknap/params.hpp"
#include "cknap/sigma.hpp"
#include "cknap/signature.hpp"
#include "cknap/experiment.hpp"
