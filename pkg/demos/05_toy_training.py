"""Train the tiny model on the interference task.

The task labels each image by the relative offset of two planted oriented
patterns, so it is unsolvable without mixing information across tokens;
phase-aware mixing learns it to ~100% train accuracy in a few hundred steps.

Run: python demos/05_toy_training.py        (about half a minute)
"""

import time

from wavemlp import SynthTask, TrainConfig, preset, train

task = SynthTask(name="interference", seed=0)
tc = TrainConfig(epochs=12, batch_size=64, lr=3e-3, seed=0)

t0 = time.time()
model, hist = train(preset("tiny"), task, tc)
print(f"trained {len(hist.loss)} steps in {time.time() - t0:.1f}s")
print()
print("epoch  mean_loss  train_acc  val_acc")
steps_per_epoch = len(hist.loss) // len(hist.train_acc)
for e, (ta, va) in enumerate(zip(hist.train_acc, hist.val_acc)):
    chunk = hist.loss[e * steps_per_epoch : (e + 1) * steps_per_epoch]
    print(f"{e:>5}  {sum(chunk)/len(chunk):>9.4f}  {ta:>9.3f}  {va:>7.3f}")

print()
print("rerunning with the same seed reproduces the loss history bit for bit:")
_m2, h2 = train(preset("tiny"), task, tc)
print("  identical:", hist.loss == h2.loss)
