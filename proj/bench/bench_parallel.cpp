// Serial reference vs OpenMP path for the two parallel kernels: outer
// cross-fitting folds and MSM bootstrap replicates.
//
//   bench_parallel [n] [replicates] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "rcpolicy/crossfit.hpp"
#include "rcpolicy/dgp.hpp"
#include "rcpolicy/msm.hpp"
#include "rcpolicy/parallel.hpp"

using namespace rcpolicy;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  identical %s\n", name, serial,
              parallel, serial / parallel, same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 5000;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 100;
  if (argc > 3) set_thread_limit(std::atoi(argv[3]));
  std::printf("n = %zu, replicates = %d, threads = %d\n", n, reps, thread_limit());

  const Dataset ds = generate(DgpSpec::preset(DgpKind::adaptr_like), n, 11);
  EstimatorConfig cfg;
  cfg.propensity.known_value = 0.5;

  EstimatorConfig ser = cfg, par = cfg;
  ser.execution = Execution::serial;
  par.execution = Execution::parallel;

  CrossFit a, b;
  const double ts = seconds([&] { a = cross_fit(ds, ser, true); });
  const double tp = seconds([&] { b = cross_fit(ds, par, true); });
  report("cross_fit (folds)", ts, tp, a.blip == b.blip && a.tracks[0].q1 == b.tracks[0].q1);

  MsmOptions opt;
  opt.kappas = default_kappa_grid();
  opt.replicates = reps;
  opt.mode = BootstrapMode::fixed_rule;
  MsmFit ma, mb;
  const double bs = seconds([&] { ma = msm_with_bootstrap(ds, opt, ser); });
  const double bp = seconds([&] { mb = msm_with_bootstrap(ds, opt, par); });
  bool same = ma.draws.size() == mb.draws.size();
  for (std::size_t r = 0; same && r < ma.draws.size(); ++r)
    same = ma.draws[r].coef.beta0 == mb.draws[r].coef.beta0 && ma.draws[r].coef.beta1 == mb.draws[r].coef.beta1;
  report("msm bootstrap", bs, bp, same);
  return same ? 0 : 1;
}
