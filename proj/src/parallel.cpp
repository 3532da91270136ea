#include "varclust/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace varclust {

int thread_count() {
#ifdef _OPENMP
	return omp_get_max_threads();
#else
	return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
	if (n > 0) {
		omp_set_num_threads(n);
	}
#else
	(void)n;
#endif
}

int threads_from_env() {
	const char *raw = std::getenv("VARCLUST_THREADS");
	if (raw == nullptr) {
		return 0;
	}
	try {
		const int n = std::stoi(raw);
		return n > 0 ? n : 0;
	} catch (const std::exception &) {
		return 0;
	}
}

} // namespace varclust
