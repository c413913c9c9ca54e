"""PDF reader unit tests against reportlab-produced files."""

import io

import pytest
from reportlab.lib.pagesizes import letter
from reportlab.pdfgen import canvas

from citeweave.errors import UnsupportedDocumentError
from citeweave.pdfread import read_text_runs


def _pdf(draw) -> bytes:
    buffer = io.BytesIO()
    c = canvas.Canvas(buffer, pagesize=letter)
    draw(c)
    c.save()
    return buffer.getvalue()


def test_reads_positioned_runs_with_fonts():
    def draw(c):
        c.setFont("Helvetica", 10)
        c.drawString(72, 720, "alpha beta")
        c.setFont("Helvetica-Bold", 12)
        c.drawString(306, 650, "gamma")

    runs, pages = read_text_runs(_pdf(draw))
    assert pages == 1
    assert [(r.text, r.font, r.size) for r in runs] == [
        ("alpha beta", "Helvetica", 10.0),
        ("gamma", "Helvetica-Bold", 12.0),
    ]
    assert runs[0].x == pytest.approx(72)
    assert runs[0].y == pytest.approx(720)
    assert runs[1].x == pytest.approx(306)


def test_advance_width_matches_reportlab_metrics():
    from reportlab.pdfbase.pdfmetrics import stringWidth

    text = "Measurement of widths, (escapes) and \\ slashes."

    def draw(c):
        c.setFont("Times-Roman", 11)
        c.drawString(100, 500, text)

    runs, _ = read_text_runs(_pdf(draw))
    assert runs[0].text == text
    assert runs[0].width == pytest.approx(stringWidth(text, "Times-Roman", 11), abs=0.01)


def test_multi_page_order():
    def draw(c):
        c.setFont("Helvetica", 10)
        c.drawString(72, 700, "page one")
        c.showPage()
        c.setFont("Helvetica", 10)
        c.drawString(72, 700, "page two")

    runs, pages = read_text_runs(_pdf(draw))
    assert pages == 2
    assert [(r.page, r.text) for r in runs] == [(1, "page one"), (2, "page two")]


def test_not_a_pdf_rejected():
    with pytest.raises(UnsupportedDocumentError):
        read_text_runs(b"plain text, not a pdf")


def test_pdf_without_text_layer_rejected():
    def draw(c):
        c.rect(100, 100, 200, 200)  # vector graphics only

    with pytest.raises(UnsupportedDocumentError, match="no extractable text"):
        read_text_runs(_pdf(draw))


def test_encrypted_pdf_rejected():
    def draw(c):
        c.setFont("Helvetica", 10)
        c.drawString(72, 700, "secret")
        c.setEncrypt("password")

    buffer = io.BytesIO()
    c = canvas.Canvas(buffer, pagesize=letter, encrypt="password")
    c.setFont("Helvetica", 10)
    c.drawString(72, 700, "secret")
    c.save()
    with pytest.raises(UnsupportedDocumentError, match="encrypted"):
        read_text_runs(buffer.getvalue())


def test_windows_1252_punctuation_decoded():
    def draw(c):
        c.setFont("Helvetica", 10)
        c.drawString(72, 700, "range [2–5] with en-dash")

    runs, _ = read_text_runs(_pdf(draw))
    assert "[2–5]" in runs[0].text
