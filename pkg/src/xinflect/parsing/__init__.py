"""Dependency parsers: 2-planar sequence labeling (SL) and graph-based MST (GB)."""

from .model import GB, KINDS, SL, ParserModel, load_parser, parse, parse_treebank, save_parser, train_parser
from .mst import decode_single_root, enforce_single_root, mst_decode, tree_score
from .planar import EncodedSentence, decode_2planar, encode_2planar, encode_heads, plane_assignment

__all__ = [
    "GB",
    "KINDS",
    "SL",
    "EncodedSentence",
    "ParserModel",
    "decode_2planar",
    "decode_single_root",
    "encode_2planar",
    "encode_heads",
    "enforce_single_root",
    "load_parser",
    "mst_decode",
    "parse",
    "parse_treebank",
    "plane_assignment",
    "save_parser",
    "train_parser",
    "tree_score",
]
