"""Train a single tagger on synthetic clinical notes and score it."""

# %%
from spanboost import Preprocessor, TrainConfig, evaluate, tag_documents, train_on_documents
from spanboost.synthetic import generate_corpus

pairs = generate_corpus(120, seed=0)
train, test = [p.task1 for p in pairs[:90]], [p.task1 for p in pairs[90:]]
print(train[0].text)
print(train[0].annotations)

# %%
pre = Preprocessor()
model = train_on_documents(train, None, TrainConfig(epochs=8), pre)
for rec in model.history:
    print(rec)

# %%
pred = tag_documents(model, test, pre)
report = evaluate(test, pred)
print(report.to_text())
