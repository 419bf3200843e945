#pragma once

// Convenience header pulling in the whole library.

#include "trid/baselines.hpp"
#include "trid/contraction.hpp"
#include "trid/factors.hpp"
#include "trid/io.hpp"
#include "trid/mals.hpp"
#include "trid/mask.hpp"
#include "trid/rank_tools.hpp"
#include "trid/recovery.hpp"
#include "trid/solver.hpp"
#include "trid/tensor.hpp"
