// Copyright 2026 The lrdwm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LRDWM_PARALLEL_H_
#define LRDWM_PARALLEL_H_

#include <functional>

namespace lrdwm {

// Number of worker threads for a request of `threads` (0 = hardware).
int ResolveThreads(int threads);

// Calls fn(i) for i in [0, n) on up to `threads` threads. Work items must be
// independent. The first exception thrown by any item is rethrown after all
// workers stop.
void ParallelFor(int n, int threads, const std::function<void(int)>& fn);

}  // namespace lrdwm

#endif  // LRDWM_PARALLEL_H_
