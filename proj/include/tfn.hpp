#pragma once

// Everything in one include.

#include "tfn/adjoint.hpp"
#include "tfn/assignment.hpp"
#include "tfn/cost.hpp"
#include "tfn/covering.hpp"
#include "tfn/error.hpp"
#include "tfn/field.hpp"
#include "tfn/identity.hpp"
#include "tfn/io.hpp"
#include "tfn/measure.hpp"
#include "tfn/ot.hpp"
#include "tfn/plan.hpp"
#include "tfn/point.hpp"
#include "tfn/random.hpp"
#include "tfn/simple.hpp"
#include "tfn/transfunction.hpp"
#include "tfn/transport.hpp"
