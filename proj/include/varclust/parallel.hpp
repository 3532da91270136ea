#pragma once

namespace varclust {

// Intra-job worker count. Every parallel loop writes to disjoint,
// index-addressed slots, so results do not depend on this value.
int thread_count();
void set_thread_count(int n);

// Reads VARCLUST_THREADS; returns 0 when unset or invalid.
int threads_from_env();

} // namespace varclust
