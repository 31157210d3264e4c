"""Release gate: the extractor's output must drop into the main toolkit.

Prints one `[acceptance] ...: PASS/FAIL` line, mirroring the main package's
acceptance style. The checkpoint is a locally built 4-layer hidden-16
transformer, so the expected dim is 4 x 16 = 64; the contract is
checkpoint-agnostic.
"""

import numpy as np

from covexplain_extractor import ExtractorConfig, extract_embeddings


def test_extractor_conformance(tiny_checkpoint, small_corpus, tmp_path,
                               capsys):
    import covexplain

    out1 = tmp_path / "one.cvxe"
    out2 = tmp_path / "two.cvxe"
    cfg = dict(checkpoint=str(tiny_checkpoint), corpus=str(small_corpus))
    extract_embeddings(ExtractorConfig(out=str(out1), **cfg))
    extract_embeddings(ExtractorConfig(out=str(out2), **cfg))

    # the primary reader is the validator: magic, version, counts, payload
    mat = covexplain.read_embeddings(out1)
    ids, _ = __import__("covexplain_extractor").read_corpus_field(
        small_corpus, "text")
    dim_ok = mat.dim == 4 * 16
    rows_ok = mat.ids == tuple(ids)
    twins_ok = np.array_equal(mat.row("r000"), mat.row("r004"))
    bytes_ok = out1.read_bytes() == out2.read_bytes()

    ok = dim_ok and rows_ok and twins_ok and bytes_ok
    with capsys.disabled():
        print(f"[acceptance] extractor conformance (CVXE validates, "
              f"dim=4x hidden, corpus-aligned rows, identical texts -> "
              f"identical rows): {'PASS' if ok else 'FAIL'} "
              f"(dim={mat.dim}, rows={len(mat.ids)}, twins={twins_ok}, "
              f"rerun_identical={bytes_ok})")
    assert ok
