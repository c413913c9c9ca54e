"""Start a mock-backed service instance for the frontend e2e test.

Writes a sample PDF (named-style bibliography, so annotated answers carry
only output citation numbers), picks a free port, prints one JSON line with
connection details, then serves until killed.
"""

import json
import socket
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO_ROOT / "tests"))

import uvicorn

from citeweave.config import Config
from citeweave.service import make_app
from pdfgen import generate_article

workdir = Path(tempfile.mkdtemp(prefix="citeweave-e2e-"))
pdf, manifest = generate_article(
    seed=31, columns=2, depth=2, paragraph_count=10,
    bib_style="named", sep_style="gap", bib_count=6,
)
pdf_path = workdir / "sample.pdf"
pdf_path.write_bytes(pdf)
query = " ".join(manifest.sections[0].paragraphs[0].split()[:7])

with socket.socket() as probe:
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]

config = Config(job_threshold_seconds=0.0)  # force the 202 + polling flow
app = make_app(str(workdir / "corpus.json"), config)

print(
    json.dumps(
        {
            "port": port,
            "pdf_path": str(pdf_path),
            "query": query,
            "title": manifest.title,
        }
    ),
    flush=True,
)
uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
