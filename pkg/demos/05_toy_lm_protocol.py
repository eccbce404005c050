"""
Talking to a language-model server over the wire
================================================

"""

# Candidate generators that need a language model (masked fill and
# dropout fill) speak a small length-prefixed JSON protocol to whatever
# server is listening. The package ships a deterministic toy model so
# everything runs without a real LM; a heavyweight server can drop in
# behind the same protocol.
from textveil.lm_bridge import (
    Client,
    EncodeRequest,
    FillRequest,
    MASK_SENTINEL,
    ToyLanguageModel,
    start_server,
)

vocabulary = ["coffee", "tea", "juice", "water", "morning", "evening", "every"]
server = start_server(ToyLanguageModel(vocabulary))
host, port = server.server_address
print(f"toy model serving {len(vocabulary)} words on {host}:{port}")

# A mask fill replaces one position with the sentinel and asks the model
# what belongs there. The toy model ranks its vocabulary against the
# masked slot's neighbours.
client = Client.connect(f"{host}:{port}")
fill = client.fill(
    FillRequest(
        client.next_request_id(),
        "mask",
        ("coffee", MASK_SENTINEL, "morning"),
        target_index=1,
        top_k=3,
        seed=0,
    )
)
print("\nmask fill for 'coffee _ morning':")
for word, score in fill.candidates:
    print(f"  {word:<8} {score:+.4f}")

# Dropout fill perturbs the target word's own vector instead of masking
# it, so the original word usually stays on top.
fill = client.fill(
    FillRequest(
        client.next_request_id(),
        "dropout",
        ("coffee", "every", "morning"),
        target_index=1,
        top_k=3,
        seed=0,
        dropout_p=0.3,
    )
)
print("\ndropout fill for 'coffee every morning':")
for word, score in fill.candidates:
    print(f"  {word:<8} {score:+.4f}")

# The encode request returns one contextual vector per token plus an
# attention profile around the target; the rerank step and the encoding
# similarity metric are built on it.
enc = client.encode(
    EncodeRequest(client.next_request_id(), ("tea", "every", "evening"), 1)
)
print(f"\nencoded 3 tokens to {len(enc.vectors)}x{len(enc.vectors[0])} vectors")
print("attention:", [f"{a:.3f}" for a in enc.attention])

client.close()
server.shutdown()
server.server_close()
