"""
From raw posts to classifiable documents
========================================

"""

# Short social-media posts are too small to profile an author on their
# own, so the pipeline stacks each author's timeline into documents of
# up to a fixed number of posts.
from textveil.corpus import RawTweet, chunk_author, preprocess, detokenize

posts = [
    "Loving the new coffee place on 5th!! @maria you HAVE to come",
    "monday again... http://example.com/blog #mood",
    "who else is watching the game tonight?",
    "ok the referee is blind, I said what I said",
    "quiet day. reading and tea.",
]

# Tokenization lowercases, drops URLs, replaces @-mentions with a
# sentinel, splits hashtags into marker + text, and peels punctuation
# into separate tokens.
for text in posts[:2]:
    tokens = preprocess(text)
    print(text)
    print("  ->", [(t.surface, t.kind) for t in tokens])

# A timeline becomes documents. Three posts per document here, so five
# posts yield one full document and one short tail.
tweets = [RawTweet("author-1", text, "a") for text in posts]
docs = chunk_author(tweets, max_tweets=3)
print(f"\n{len(tweets)} posts -> {len(docs)} documents")
for doc in docs:
    print(f"  {len(doc.tokens):2d} tokens | {detokenize(doc.tokens)[:60]}")

# Documents remember where each post ended, so downstream code can
# recover the original posts if it needs to.
print("\nboundaries of the first document:", docs[0].tweet_boundaries)
