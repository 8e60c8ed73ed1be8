// Copyright 2026 The Radka Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "radka/binio.hpp"
#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/extract.hpp"
#include "radka/log.hpp"
#include "radka/meta.hpp"
#include "radka/mghg.hpp"
#include "radka/pipeline.hpp"
#include "radka/predictor.hpp"
#include "radka/recurrent.hpp"
#include "radka/retrieval.hpp"
#include "radka/rng.hpp"
#include "radka/sdssd.hpp"
#include "radka/speakers.hpp"
#include "radka/styleagg.hpp"
#include "radka/synthetic.hpp"
#include "radka/tensor.hpp"
#include "radka/weights.hpp"
