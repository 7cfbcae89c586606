// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "hfc/circuit.hpp"
#include "hfc/dense_oracle.hpp"
#include "hfc/kitaev.hpp"
#include "hfc/sampler.hpp"

using namespace hfc;

namespace {

GaussianState mixed_state(int L) {
  const auto lat = Lattice::honeycomb(L);
  const auto sch = Schedule::floquet(lat, L);
  const auto ms = MeasurementStrength::from_t_over_pi(0.15);
  Rng rng = make_rng(1, 0, 0);
  return evolve_net(ms, lat, sch, sample_born_net(ms, lat, sch, rng));
}

void BM_pair_update(benchmark::State& st) {
  auto g = mixed_state(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(pair_update(g.cov, 0, 1, 0.01));
}

void BM_pair_update_serial(benchmark::State& st) {
  auto g = mixed_state(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(pair_update_serial(g.cov, 0, 1, 0.01));
}

void layer_bench(benchmark::State& st, bool serial) {
  const int L = static_cast<int>(st.range(0));
  const auto lat = Lattice::honeycomb(L);
  const auto sch = Schedule::floquet(lat, L);
  const auto ms = MeasurementStrength::from_t_over_pi(0.15);
  const std::vector<std::int8_t> net(sch.num_slots(), 1);
  const auto k = layer_kernel(ms, lat, sch, net, 0);
  auto g = mixed_state(L);
  for (auto _ : st) {
    auto x = g;
    serial ? apply_layer_serial(x, k) : apply_layer(x, k);
    benchmark::DoNotOptimize(x.log_weight);
  }
}

void BM_layer(benchmark::State& st) { layer_bench(st, false); }
void BM_layer_serial(benchmark::State& st) { layer_bench(st, true); }

void dense_bench(benchmark::State& st, bool serial) {
  const int n = static_cast<int>(st.range(0));
  Rng rng = make_rng(2, 0, 0);
  const auto rho = random_density_matrix(n, rng);
  const auto op = PauliString::single(0, Pauli::Z) * PauliString::single(1, Pauli::Z);
  for (auto _ : st) {
    auto out = serial ? apply_weak_measurement_serial(rho, op, 0.3, 1) : apply_weak_measurement(rho, op, 0.3, 1);
    benchmark::DoNotOptimize(out.data.data());
  }
}

void BM_dense_kraus(benchmark::State& st) { dense_bench(st, false); }
void BM_dense_kraus_serial(benchmark::State& st) { dense_bench(st, true); }

// chains run in parallel; one thread is the serial reference
void comb_bench(benchmark::State& st, int threads) {
  const auto lat = Lattice::honeycomb(3);
  const auto sch = Schedule::floquet(lat, 3);
  const auto ms = MeasurementStrength::from_t_over_pi(0.15);
  CombConfig cfg;
  cfg.outer_sweeps = 40;
  cfg.burn_in = 10;
  cfg.branch_interval = 10;
  cfg.inner_sweeps = 10;
  cfg.chains = 4;
  const int before = omp_get_max_threads();
  omp_set_num_threads(threads);
  for (auto _ : st) benchmark::DoNotOptimize(run_comb(cfg, ms, lat, sch, default_estimators(lat, true, false)));
  omp_set_num_threads(before);
}

void BM_comb_chains(benchmark::State& st) { comb_bench(st, omp_get_max_threads()); }
void BM_comb_chains_serial(benchmark::State& st) { comb_bench(st, 1); }

void BM_kitaev_sector(benchmark::State& st) {
  const auto lat = Lattice::honeycomb(static_cast<int>(st.range(0)));
  const KitaevModel model(lat);
  const std::vector<std::int8_t> u(lat.num_bonds(), 1);
  for (auto _ : st) benchmark::DoNotOptimize(model.thermo(u, 10.0, true).log_z);
}

}  // namespace

BENCHMARK(BM_pair_update)->Arg(6)->Arg(12);
BENCHMARK(BM_pair_update_serial)->Arg(6)->Arg(12);
BENCHMARK(BM_layer)->Arg(6)->Arg(12);
BENCHMARK(BM_layer_serial)->Arg(6)->Arg(12);
BENCHMARK(BM_dense_kraus)->Arg(8)->Arg(10);
BENCHMARK(BM_dense_kraus_serial)->Arg(8)->Arg(10);
BENCHMARK(BM_comb_chains)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_comb_chains_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kitaev_sector)->Arg(3)->Arg(6);

BENCHMARK_MAIN();
