import numpy as np
import pytest
from fastapi.testclient import TestClient

from sam2_adapter.protocol import encode_png
from sam2_adapter.server import AdapterConfig, create_app


class StubPredictor:
    """Deterministic predictor: marks a 2x2 square that tracks the prompt."""

    supported_prompts = frozenset({"point", "box", "mask"})

    def __init__(self):
        self.calls = []

    def segment(self, frames_dir, n_frames, width, height, prompt):
        self.calls.append({"n_frames": n_frames, "prompt": prompt, "dir": frames_dir})
        if prompt["type"] == "point":
            u, v = prompt["point"]
        elif prompt["type"] == "box":
            u, v = prompt["box"][0], prompt["box"][1]
        else:
            set_pixels = np.argwhere(prompt["mask"])
            v, u = (set_pixels[0] if len(set_pixels) else (0, 0))
        masks = []
        for _ in range(n_frames):
            mask = np.zeros((height, width), dtype=bool)
            mask[v:v + 2, u:u + 2] = True
            masks.append(mask)
        return masks


@pytest.fixture
def stub():
    return StubPredictor()


@pytest.fixture
def client(stub):
    app = create_app(AdapterConfig(max_frames=16, queue_depth=1), predictor=stub)
    with TestClient(app) as c:
        yield c


def make_request(n_frames=3, width=4, height=4, prompt=None):
    frames = []
    for _ in range(n_frames):
        rgb = np.zeros((height, width, 3), dtype=np.uint8)
        rgb[1:3, 1:3] = (255, 0, 0)
        occupancy = np.zeros((height, width), dtype=np.uint8)
        occupancy[1:3, 1:3] = 255
        frames.append(
            {"rgb": encode_png(rgb, "RGB"), "occupancy": encode_png(occupancy, "L")}
        )
    return {
        "width": width,
        "height": height,
        "frames": frames,
        "prompt": prompt or {"type": "point", "point": [1, 1]},
    }
