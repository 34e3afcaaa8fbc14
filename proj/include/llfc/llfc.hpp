// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.

#pragma once

#include "llfc/conditions.hpp"
#include "llfc/config.hpp"
#include "llfc/connectivity.hpp"
#include "llfc/data.hpp"
#include "llfc/errors.hpp"
#include "llfc/experiment.hpp"
#include "llfc/io.hpp"
#include "llfc/linalg.hpp"
#include "llfc/nn.hpp"
#include "llfc/permutation.hpp"
#include "llfc/reports.hpp"
#include "llfc/rng.hpp"
