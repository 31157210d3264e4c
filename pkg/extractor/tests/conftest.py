import json

import pytest

VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
         "the", "jab", "is", "safe", "bad", "get", "now", "please",
         "vaccine", "no", "yes", "a", "<url>", "<hashtag>", "shot",
         "morning", "coffee", "library", "harvest", "wallet",
         "bio", "number", "0", "1", "2"]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """A 4-layer, hidden-16 BERT built locally; no downloads involved.

    The wordpiece tokenizer is assembled explicitly so the vocab really
    loads (constructing a Bert*Tokenizer from a bare vocab file keeps only
    the special tokens on recent transformers versions).
    """
    import torch
    from tokenizers import (Tokenizer, models, normalizers, pre_tokenizers,
                            processors)
    from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

    d = tmp_path_factory.mktemp("ckpt")
    wp = Tokenizer(models.WordPiece(vocab={w: i for i, w in enumerate(VOCAB)},
                                    unk_token="[UNK]"))
    wp.normalizer = normalizers.BertNormalizer(lowercase=True)
    wp.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    wp.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]", pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", VOCAB.index("[CLS]")),
                        ("[SEP]", VOCAB.index("[SEP]"))])
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=wp, unk_token="[UNK]", pad_token="[PAD]",
        cls_token="[CLS]", sep_token="[SEP]", mask_token="[MASK]")
    tokenizer.save_pretrained(d)
    config = BertConfig(
        vocab_size=len(VOCAB), hidden_size=16, num_hidden_layers=4,
        num_attention_heads=2, intermediate_size=32,
        max_position_embeddings=64)
    torch.manual_seed(0)
    BertModel(config).save_pretrained(d)
    return d


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Ten records; two share a tweet verbatim, one tweet is empty."""
    d = tmp_path_factory.mktemp("corpus")
    path = d / "corpus.jsonl"
    rows = []
    texts = ["get the jab now", "the jab is bad", "vaccine is safe",
             "no jab please", "get the jab now", "", "yes get the shot",
             "morning coffee harvest", "the wallet is safe #tag",
             "see https://x.test/a now"]
    for i, text in enumerate(texts):
        rows.append({"id": f"r{i:03d}", "timestamp": 1600000000 + i,
                     "text": text, "description": f"bio number {i % 3}",
                     "state": "s1", "race": "a", "race_pic": "b",
                     "gender": "c", "label": "anti" if i % 2 else "pro"})
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n",
                    encoding="utf-8")
    return path
