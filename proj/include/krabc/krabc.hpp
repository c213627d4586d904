#pragma once

// Umbrella header for the kernel recursive ABC library.

#include "krabc/discrepancy.hpp"
#include "krabc/errors.hpp"
#include "krabc/herding.hpp"
#include "krabc/kabc.hpp"
#include "krabc/kernels.hpp"
#include "krabc/models.hpp"
#include "krabc/oracle.hpp"
#include "krabc/parallel.hpp"
#include "krabc/random.hpp"
#include "krabc/recursive_abc.hpp"
#include "krabc/types.hpp"
