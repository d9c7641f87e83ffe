#!/usr/bin/env python3
"""Convert a Hugging Face BERT checkpoint into a newslens tensor archive.

Usage:
    convert_hf_bert.py MODEL_DIR_OR_NAME OUT.bin [--vocab-out vocab.txt]

The archive layout is an 8-byte little-endian manifest length, a JSON manifest mapping
tensor names to {dtype, shape, offset, nbytes}, then the raw little-endian f32 data.
Names follow the BertModel state dict without the "bert." prefix; old-style LayerNorm
"gamma"/"beta" parameters are renamed to "weight"/"bias". Pooler and task-head tensors
are dropped.
"""

import argparse
import json
import struct
import sys

import numpy as np


def canonical_name(name):
    if name.startswith("bert."):
        name = name[len("bert."):]
    if not (name.startswith("embeddings.") or name.startswith("encoder.")):
        return None
    if name.endswith("position_ids"):
        return None
    return name.replace("LayerNorm.gamma", "LayerNorm.weight").replace("LayerNorm.beta", "LayerNorm.bias")


def write_archive(tensors, path):
    manifest = {}
    offset = 0
    blobs = []
    for name in sorted(tensors):
        data = np.ascontiguousarray(tensors[name], dtype="<f4")
        raw = data.tobytes()
        manifest[name] = {"dtype": "f32", "shape": list(data.shape), "offset": offset, "nbytes": len(raw)}
        offset += len(raw)
        blobs.append(raw)
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for raw in blobs:
            f.write(raw)


def state_dict_tensors(state_dict):
    out = {}
    for name, value in state_dict.items():
        target = canonical_name(name)
        if target is not None:
            out[target] = value.detach().cpu().float().numpy()
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("model")
    parser.add_argument("out")
    parser.add_argument("--vocab-out")
    args = parser.parse_args(argv)

    from transformers import BertModel, BertTokenizer

    model = BertModel.from_pretrained(args.model)
    write_archive(state_dict_tensors(model.state_dict()), args.out)
    cfg = model.config
    print(
        f"wrote {args.out}: {cfg.num_hidden_layers} layers, hidden {cfg.hidden_size}, "
        f"{cfg.num_attention_heads} heads (pass --num-heads {cfg.num_attention_heads})",
        file=sys.stderr,
    )
    if args.vocab_out:
        tok = BertTokenizer.from_pretrained(args.model)
        vocab = sorted(tok.vocab.items(), key=lambda kv: kv[1])
        with open(args.vocab_out, "w", encoding="utf-8") as f:
            for token, _ in vocab:
                f.write(token + "\n")


if __name__ == "__main__":
    main()
