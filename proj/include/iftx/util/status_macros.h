/*
 * Copyright 2026 The IFTX Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef IFTX_UTIL_STATUS_MACROS_H_
#define IFTX_UTIL_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define IFTX_CONCAT_INNER_(a, b) a##b
#define IFTX_CONCAT_(a, b) IFTX_CONCAT_INNER_(a, b)

#define IFTX_RETURN_IF_ERROR(expr)                  \
  do {                                              \
    const ::absl::Status iftx_status_ = (expr);     \
    if (!iftx_status_.ok()) return iftx_status_;    \
  } while (0)

#define IFTX_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, expr) \
  auto tmp = (expr);                                \
  if (!tmp.ok()) return tmp.status();               \
  lhs = std::move(tmp).value()

#define IFTX_ASSIGN_OR_RETURN(lhs, expr) \
  IFTX_ASSIGN_OR_RETURN_IMPL_(IFTX_CONCAT_(iftx_statusor_, __LINE__), lhs, expr)

#endif  // IFTX_UTIL_STATUS_MACROS_H_
