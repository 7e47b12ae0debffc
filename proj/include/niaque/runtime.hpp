// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace niaque {

/// Keeps freed tensor buffers in the process heap instead of returning them
/// to the kernel after every training step. No-op outside glibc.
void tune_allocator();

}  // namespace niaque
