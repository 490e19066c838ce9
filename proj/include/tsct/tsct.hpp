#pragma once

#include "core.hpp"
#include "dba.hpp"
#include "dtw.hpp"
#include "errors.hpp"
#include "fcn.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "similarity.hpp"
#include "synthetic.hpp"
#include "transfer.hpp"
#include "ucr.hpp"
