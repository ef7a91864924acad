"""Video predictor interface and the SAM 2 implementation behind it.

The server only needs ``supported_prompts`` and ``segment``; tests inject a
stub, deployments construct :class:`Sam2VideoPredictor` (which imports torch
and sam2 lazily so the protocol layer stays runnable without model deps).
"""

from __future__ import annotations

from pathlib import Path
from typing import Protocol

import numpy as np


class VideoPredictor(Protocol):
    supported_prompts: frozenset[str]

    def segment(
        self,
        frames_dir: Path,
        n_frames: int,
        width: int,
        height: int,
        prompt: dict,
    ) -> list[np.ndarray]:
        """One bool (height, width) mask per frame, in frame order."""
        ...


class Sam2VideoPredictor:
    """Wraps the official SAM 2 video predictor.

    Frame-0 prompts map directly onto the predictor API: point and box via
    ``add_new_points_or_box``, mask via ``add_new_mask``. Where the model
    proposes multiple mask hypotheses, the highest predicted score wins
    (the predictor's default selection), matching the single-mask contract.
    """

    supported_prompts = frozenset({"point", "box", "mask"})

    def __init__(self, checkpoint: str, model_cfg: str, device: str = "cuda"):
        import torch
        from sam2.build_sam import build_sam2_video_predictor

        self._torch = torch
        self._predictor = build_sam2_video_predictor(model_cfg, checkpoint, device=device)

    def segment(self, frames_dir, n_frames, width, height, prompt):
        torch = self._torch
        with torch.inference_mode():
            state = self._predictor.init_state(video_path=str(frames_dir))
            if prompt["type"] == "point":
                u, v = prompt["point"]
                self._predictor.add_new_points_or_box(
                    inference_state=state,
                    frame_idx=0,
                    obj_id=1,
                    points=np.array([[u, v]], dtype=np.float32),
                    labels=np.array([1], dtype=np.int32),
                )
            elif prompt["type"] == "box":
                self._predictor.add_new_points_or_box(
                    inference_state=state,
                    frame_idx=0,
                    obj_id=1,
                    box=np.array(prompt["box"], dtype=np.float32),
                )
            else:
                self._predictor.add_new_mask(
                    inference_state=state,
                    frame_idx=0,
                    obj_id=1,
                    mask=prompt["mask"].astype(bool),
                )
            masks = {}
            for frame_idx, _obj_ids, logits in self._predictor.propagate_in_video(state):
                masks[frame_idx] = (logits[0, 0] > 0).cpu().numpy().astype(bool)
        empty = np.zeros((height, width), dtype=bool)
        return [masks.get(t, empty) for t in range(n_frames)]
