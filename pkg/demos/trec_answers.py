"""
From answer regexes to answer sets
==================================

Some collections give answers as regular expressions. Matching the
regex over the corpus and grouping the normalized matches yields the
distinct answers.
"""

from multirank.matching import Discard, normalize, trec_pipeline

texts = [
    "The Ames Research Center is run by NASA.",
    "Robert McNamara served as Secretary of Defense.",
    "NASA AMES hosts a wind tunnel; so does New York.",
    "newyork style pizza",
]

print(normalize("  NASA  Ames!! "))

result = trec_pipeline("q1", r"(NASA )?Ames|McNamara|New ?York", texts)
if isinstance(result, Discard):
    print("discarded:", result.reason)
else:
    for i, aliases in enumerate(result.answers):
        print(i, aliases)

# a regex that matches nothing discards the question
print(trec_pipeline("q2", r"Zanzibar", texts))
