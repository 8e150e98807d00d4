#pragma once

#include "qesolve/analysis.hpp"
#include "qesolve/ansatz.hpp"
#include "qesolve/common.hpp"
#include "qesolve/compiler.hpp"
#include "qesolve/encoding.hpp"
#include "qesolve/estimator.hpp"
#include "qesolve/optimizer.hpp"
#include "qesolve/problem.hpp"
#include "qesolve/statevector.hpp"
