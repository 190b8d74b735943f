#pragma once

#include "rbcm/automorphism.hpp"
#include "rbcm/bruteforce.hpp"
#include "rbcm/cayley_map.hpp"
#include "rbcm/classify.hpp"
#include "rbcm/homomorphism.hpp"
#include "rbcm/json_io.hpp"
#include "rbcm/metacyclic.hpp"
#include "rbcm/parallel.hpp"
#include "rbcm/two_adic.hpp"
