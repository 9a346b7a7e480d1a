"""From character spans to tags and back.

Run with ``python demos/01_tag_schemes.py``.
"""

# %%
from spanboost.corpus_io import Document, SpanAnnotation, tokenize
from spanboost.tagcodec import BIO, BIOSE, TagSequence, biose_to_bio, decode, encode, repair, validate

text = "Su padre trabajó como albañil y ahora está jubilado."
doc = Document("d1", text, (SpanAnnotation(22, 29, "PROFESION"), SpanAnnotation(43, 51, "SITUACION_LABORAL")))
tokens = tokenize(doc)
print([t.surface for t in tokens])

# %%
# The same spans under both schemes. BIOSE marks single-token entities with S-.
for scheme in (BIO, BIOSE):
    print(scheme, encode(tokens, doc.annotations, scheme).tags)

# %%
tags = encode(tokens, doc.annotations, BIOSE)
assert decode(tags, tokens) == list(doc.annotations)
assert decode(biose_to_bio(tags), tokens) == list(doc.annotations)

# %%
# Model output can be ungrammatical. validate() says where, repair() fixes it.
broken = TagSequence(("O", "I-PROFESION", "I-PROFESION", "O", "B-X", "I-Y"), BIO)
for v in validate(broken):
    print("violation", v)
fixed, n = repair(broken)
print(fixed.tags, f"({n} positions changed)")
