/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_MLTR_HPP_
#define MLTR_MLTR_HPP_

#include "mltr/data.hpp"
#include "mltr/errors.hpp"
#include "mltr/evaluation.hpp"
#include "mltr/experiment.hpp"
#include "mltr/letor_io.hpp"
#include "mltr/losses.hpp"
#include "mltr/meta_trainer.hpp"
#include "mltr/random.hpp"
#include "mltr/ranker.hpp"

#endif  // MLTR_MLTR_HPP_
