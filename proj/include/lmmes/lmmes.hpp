/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/analyze.hpp"
#include "lmmes/csv.hpp"
#include "lmmes/datagen.hpp"
#include "lmmes/dataset.hpp"
#include "lmmes/design.hpp"
#include "lmmes/distributions.hpp"
#include "lmmes/effectsize.hpp"
#include "lmmes/errors.hpp"
#include "lmmes/gls.hpp"
#include "lmmes/report_io.hpp"
#include "lmmes/varcomp.hpp"
