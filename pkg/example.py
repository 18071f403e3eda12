import entropynet
from entropynet import cpwl, plot
import os
import time

# 1. Pick a benchmark and a configuration. Any key left out falls back to
#    the benchmark's preset; this one is small enough to run in a minute
problem = entropynet.make_benchmark("standing_shock")

raw_config = {
  "benchmark": "standing_shock",
  "net": {"widths": [2, 16, 16, 1]},
  "mesh": {"n_cells_x": [32], "n_cells_t": 16},
  "train": {"n_strips": 1, "n_train": 300, "log_every": 50},
  "pert": {"n_pert": 200},
}
cfg = entropynet.resolve_config(raw_config, problem)

print("Training on '{}' ({} iterations, {} candidates per iteration) ...".format(problem.name, cfg.n_train, cfg.n_pert))

train_start_time = time.time()

# 2. Train. The result holds one network per time strip, the per-iteration
#    loss history as a pandas DataFrame and a stitched solution over all strips
result = entropynet.run_training(cfg, problem)

train_end_time = time.time()
print("Done. Training took {:.1f} seconds".format(train_end_time - train_start_time))
print("Best iterations per strip:", result.best_iterations)
print(result.history[["iteration", "total", "j_ent_star", "l_reg", "l_ibc_initial"]].tail())

# 3. Measure the relative L1 error against the exact solution
report = entropynet.relative_errors(result.solution, problem)
print("Relative L1 error at T: {:.4e}, over space-time: {:.4e}".format(report.e_r_final, report.e_r_spacetime))

# 4. Compare with the piecewise linear shock competitor at the same mesh size
h = 1.0 / 32
competitor = cpwl.build_shock_competitor(problem, h)
print("Competitor loss at h = {}: {:.4e}".format(h, cpwl.competitor_loss(competitor, problem, h).total))

# 5. Write the loss history and an HTML chart of the profiles
outdir = os.path.join(os.path.dirname(os.path.realpath(__file__)), "results")
os.makedirs(outdir, exist_ok=True)
result.history.to_csv(os.path.join(outdir, "history.csv"), index=False)
plot.plot_solution(result.solution, problem, [0.0, 0.25, 0.5], filedir=outdir, filename="standing_shock.html")
print("Wrote results to {}".format(outdir))
