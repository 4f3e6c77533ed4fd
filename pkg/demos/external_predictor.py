"""Serve a model over the stdio wire protocol and query it.

The protocol is one JSON object per line:

    -> {"id": "<nonce>", "images": ["<base64 PNG>", ...]}
    <- {"id": "<same nonce>", "probs": [[p_no_tumor, p_tumor], ...]}

The child below reimplements the builtin blob rule, so the two routes
should agree bit-for-bit on 8-bit images.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from masklime import PredictorHandle, builtin_blob_predict, predict_batch

SERVER = '''
import sys, json, base64, io
import numpy as np
from PIL import Image

for line in sys.stdin:
    req = json.loads(line)
    probs = []
    for payload in req["images"]:
        arr = np.asarray(Image.open(io.BytesIO(base64.b64decode(payload)))) / 255.0
        p1 = min(1.0, (np.count_nonzero(arr >= 0.8) / arr.size) / 0.05)
        probs.append([1.0 - p1, p1])
    print(json.dumps({"id": req["id"], "probs": probs}), flush=True)
'''

script = Path(tempfile.mkdtemp(prefix="masklime_demo_")) / "server.py"
script.write_text(SERVER)

# Dim random backgrounds with an increasing count of bright pixels, so the
# probabilities sweep the whole [0, 1] range instead of all saturating.
rng = np.random.default_rng(0)
images = []
for bright_count in (0, 10, 26, 51, 77, 102):
    img = rng.integers(0, 200, (32, 32)).astype(float) / 255.0
    img.ravel()[:bright_count] = 230.0 / 255.0
    images.append(img)

handle = PredictorHandle.from_spec(f"exec:{sys.executable} {script}")
try:
    remote = predict_batch(handle, images)
finally:
    handle.close()

print(f"{'image':<8}{'builtin':>10}{'via exec':>10}")
for i, (img, pred) in enumerate(zip(images, remote)):
    local = builtin_blob_predict(img)
    print(f"{i:<8}{local.p_tumor:>10.4f}{pred.p_tumor:>10.4f}")
    assert local.p_tumor == pred.p_tumor
print("stdio predictor agrees with the builtin rule")
