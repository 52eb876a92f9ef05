import sys
import time
from dataclasses import replace

from divgan import training as T
from divgan.training import TrainConfig, train, with_weight

init_scale = float(sys.argv[1])
steps = int(sys.argv[2]) if len(sys.argv) > 2 else 10000
seeds = [int(s) for s in sys.argv[3].split(",")] if len(sys.argv) > 3 else [0, 1]

orig = T.task_specs


def patched(cfg):
    g, d = orig(cfg)
    return replace(g, init_scale=init_scale), d


T.task_specs = patched

for seed in seeds:
    for lam in (0.0, 0.1):
        cfg = with_weight(TrainConfig(task="ring", steps=steps, seed=seed), lam)
        t0 = time.time()
        res = train(cfg)
        r = res.eval_report
        print(
            f"init={init_scale} seed={seed} lam={lam}: modes={r.modes_captured} "
            f"hq={r.hq_fraction:.3f} div={r.pairwise_diversity:.3f} fre={r.frechet2:.4f} "
            f"({time.time()-t0:.0f}s)",
            flush=True,
        )
