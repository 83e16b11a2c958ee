#pragma once

#include "hpls/basis.hpp"
#include "hpls/errors.hpp"
#include "hpls/experiments.hpp"
#include "hpls/hybrid.hpp"
#include "hpls/io.hpp"
#include "hpls/model_select.hpp"
#include "hpls/pcr.hpp"
#include "hpls/pls.hpp"
#include "hpls/random.hpp"
#include "hpls/synthetic.hpp"
