"""Compare the two split-search kernels on representative training data.

Run directly:  python3 benchmarks/bench_forest.py
The compiled path is selected at import time, so the script re-imports the
kernel module under both settings via subprocess.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

_WORK = """
import time

import numpy as np

from malcdf.baseline import kernels
from malcdf.baseline.features import dataset_matrix
from malcdf.baseline.forest import TrainConfig, train_forest
from malcdf.events import StreamConfig, generate_dataset

train = generate_dataset(StreamConfig(total_records=2000, attack_records=700, seed=77))
X, y, _ = dataset_matrix(train)
idx = np.arange(X.shape[1], dtype=np.int64)

kernels.best_split(X, y, idx)  # warm-up (includes JIT compile when enabled)

start = time.perf_counter()
for _ in range(200):
    kernels.best_split(X, y, idx)
split_s = time.perf_counter() - start

start = time.perf_counter()
train_forest(train, TrainConfig(n_trees=25, seed=3))
train_s = time.perf_counter() - start

import json
print(json.dumps({
    "using_numba": kernels.USING_NUMBA,
    "split_search_200x_s": round(split_s, 4),
    "train_25_trees_s": round(train_s, 4),
}))
"""


def run(no_numba: bool) -> dict:
    env = dict(os.environ, MALCDF_NO_NUMBA="1" if no_numba else "")
    out = subprocess.run([sys.executable, "-c", _WORK], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    t0 = time.perf_counter()
    numpy_path = run(no_numba=True)
    compiled_path = run(no_numba=False)
    print(f"numpy kernel:    {numpy_path}")
    print(f"selected kernel: {compiled_path}")
    if compiled_path["using_numba"]:
        speedup = numpy_path["split_search_200x_s"] / compiled_path["split_search_200x_s"]
        print(f"split-search speedup (compiled vs numpy): {speedup:.2f}x")
    else:
        print("numba unavailable; both runs used the numpy kernel")
    print(f"total benchmark time: {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
