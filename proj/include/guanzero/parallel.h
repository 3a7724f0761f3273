#ifndef GUANZERO_PARALLEL_H_
#define GUANZERO_PARALLEL_H_

namespace guanzero {

// Worker count for `requested` workers, capped by GUANZERO_THREADS when set
// to a positive integer. Never below 1.
int worker_threads(int requested);

}  // namespace guanzero

#endif  // GUANZERO_PARALLEL_H_
