"""Full command-line round trip on synthetic data, inside a temp directory.

gen-synthetic -> extract -> init-weights -> infer -> eval, then a second
extract+infer pass to confirm byte-identical outputs under the same seed.

Run: python3 demos/end_to_end.py
"""

import tempfile
from pathlib import Path

from cloudgraph.cli import main
from cloudgraph.config import ModelShape, PipelineConfig, serialize_config

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    frames = tmp / "frames.csv"
    assert main(["gen-synthetic", "--frames", "12", "--points", "48",
                 "--seed", "2", "--out", str(frames)]) == 0

    cfg = tmp / "run.cfg"
    cfg.write_text(serialize_config(
        PipelineConfig(K=8, downsample_enabled=True, Q=2, seed=9),
        ModelShape(head="pose", output_size=13, mid_hip_index=0,
                   edge_units=(16,), node_units=(24,), gat_units=(16,),
                   frame_units=(16,), pred_units=(16,)),
    ), encoding="utf-8")

    weights = tmp / "weights.bin"
    assert main(["init-weights", "--config", str(cfg), "--seed", "4",
                 "--out", str(weights)]) == 0

    for run in ("first", "second"):
        graphs = tmp / f"graphs_{run}"
        preds = tmp / f"preds_{run}.csv"
        assert main(["extract", str(frames), "--config", str(cfg),
                     "--out", str(graphs)]) == 0
        assert main(["infer", str(graphs), "--weights", str(weights),
                     "--config", str(cfg), "--out", str(preds)]) == 0

    a = (tmp / "preds_first.csv").read_bytes()
    b = (tmp / "preds_second.csv").read_bytes()
    print("reruns byte-identical:", a == b)

    print("\nevaluating the (untrained) predictions against ground truth:")
    main(["eval", str(tmp / "preds_first.csv"), str(tmp / "frames_gt.csv"),
          "--task", "pose", "--mid-hip-index", "0"])
