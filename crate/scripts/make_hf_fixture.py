#!/usr/bin/env python3
"""Regenerate crates/core/tests/data/hf_tiny: a tiny random BertModel exported with
convert_hf_bert.py, its vocabulary, and reference outputs computed by transformers."""

import json
import os
import sys

import torch
from transformers import BertConfig, BertModel

sys.path.insert(0, os.path.dirname(__file__))
from convert_hf_bert import state_dict_tensors, write_archive  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "data", "hf_tiny")

VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", ".", ",", "the", "senate", "passed", "bill", "obama",
         "##care", "said", "on", "tuesday", "hoax", "video", "shows", "fake", "##s"]

SENTENCES = [
    "The senate passed the bill on Tuesday.",
    "Video shows Obamacare hoax, said fakes.",
    "the the the",
]


def encode(text, max_len):
    # ASCII-only inputs: lowercase, split punctuation, greedy longest-match pieces
    words = []
    for raw in text.lower().split():
        cur = ""
        for ch in raw:
            if ch.isalnum():
                cur += ch
            else:
                if cur:
                    words.append(cur)
                words.append(ch)
                cur = ""
        if cur:
            words.append(cur)
    ids = [VOCAB.index("[CLS]")]
    for w in words:
        start, pieces = 0, []
        while start < len(w):
            for end in range(len(w), start, -1):
                cand = w[start:end] if start == 0 else "##" + w[start:end]
                if cand in VOCAB:
                    pieces.append(VOCAB.index(cand))
                    start = end
                    break
            else:
                pieces = [VOCAB.index("[UNK]")]
                break
        ids.extend(pieces)
    ids = ids[: max_len - 1] + [VOCAB.index("[SEP]")]
    return ids


def main():
    torch.manual_seed(0)
    config = BertConfig(vocab_size=len(VOCAB), hidden_size=16, num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=32, max_position_embeddings=32, type_vocab_size=2,
                        hidden_act="gelu", layer_norm_eps=1e-12, hidden_dropout_prob=0.0,
                        attention_probs_dropout_prob=0.0)
    model = BertModel(config, add_pooling_layer=False).eval()
    with torch.no_grad():
        for p in model.parameters():
            p.copy_(torch.empty_like(p).uniform_(-0.5, 0.5))
    os.makedirs(OUT, exist_ok=True)
    write_archive(state_dict_tensors(model.state_dict()), os.path.join(OUT, "weights.bin"))
    with open(os.path.join(OUT, "vocab.txt"), "w") as f:
        f.write("\n".join(VOCAB) + "\n")

    cases = []
    for text in SENTENCES:
        ids = encode(text, 32)
        for pad_to in (None, len(ids) + 3):
            full = ids + [0] * ((pad_to or len(ids)) - len(ids))
            mask = [1] * len(ids) + [0] * (len(full) - len(ids))
            with torch.no_grad():
                out = model(input_ids=torch.tensor([full]), attention_mask=torch.tensor([mask]),
                            token_type_ids=torch.zeros(1, len(full), dtype=torch.long)).last_hidden_state[0]
            cases.append({"text": text, "input_ids": full, "attention_mask": mask,
                          "hidden": [[float(x) for x in row] for row in out[: len(ids)]]})
    meta = {"num_heads": 2, "cases": cases}
    with open(os.path.join(OUT, "expected.json"), "w") as f:
        json.dump(meta, f, indent=1)
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
