"""Bridge from live behavior tree objects to btverify interchange JSON.

Walk a constructed (not ticking) tree with `extract` and hand the emitted
document to the verification tool, e.g.:

    result = extract(make_tree())
    Path("tree.bt.json").write_text(result.document)
    # then: btverify bridge-import --json tree.bt.json
"""
from .extractor import ExtractError, ExtractionResult, extract

__all__ = ["ExtractError", "ExtractionResult", "extract"]

__version__ = "0.1.0"
