// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cae/arithmetic_coder.hpp"
#include "cae/bitplane_codec.hpp"
#include "cae/bytes.hpp"
#include "cae/checkpoint.hpp"
#include "cae/color.hpp"
#include "cae/config.hpp"
#include "cae/container.hpp"
#include "cae/dataset.hpp"
#include "cae/error.hpp"
#include "cae/grid.hpp"
#include "cae/metrics.hpp"
#include "cae/network.hpp"
#include "cae/ops.hpp"
#include "cae/parallel.hpp"
#include "cae/patches.hpp"
#include "cae/pca.hpp"
#include "cae/pnm.hpp"
#include "cae/quantizer.hpp"
#include "cae/rng.hpp"
#include "cae/tensor.hpp"
#include "cae/train.hpp"
