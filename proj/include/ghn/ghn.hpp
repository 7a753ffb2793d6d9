#pragma once

#include "autodiff.hpp"
#include "config.hpp"
#include "dynamics.hpp"
#include "experiments.hpp"
#include "graph.hpp"
#include "memory.hpp"
#include "model.hpp"
#include "optim.hpp"
#include "record.hpp"
#include "sparse.hpp"
#include "synthetic.hpp"
#include "theory.hpp"
#include "verification.hpp"
