#pragma once

#include "kubo/core.hpp"
#include "kubo/dynamics.hpp"
#include "kubo/errors.hpp"
#include "kubo/fermi.hpp"
#include "kubo/graphene.hpp"
#include "kubo/io.hpp"
#include "kubo/kubo_bloch.hpp"
#include "kubo/kubo_trace.hpp"
#include "kubo/linalg.hpp"
#include "kubo/model_io.hpp"
#include "kubo/models.hpp"
#include "kubo/parallel.hpp"
#include "kubo/rng.hpp"
