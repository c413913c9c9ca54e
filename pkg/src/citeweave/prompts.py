"""Prompt templates for every model-facing stage.

Templates are plain ``str.format`` strings. DATASET_GENERATION contains
literal braces in its format example, so it is rendered by concatenation,
never by ``format``.
"""

RELEVANCE_JUDGE = """\
You are an experienced researcher tasked with identifying relevant information.
Paragraph: {paragraph}
Query: {query}
Instructions: Determine whether the paragraph provides information that directly answers or significantly contributes to the query.
If the paragraph is relevant to the query, respond with 'True'. If it is not relevant, respond with 'False'. Provide no additional explanation.
"""

SYNTHESIZE_INITIAL = """\
You are a researcher writing a research paper.
**Paragraph**: {paragraph}
**Query**: {query}
**Instructions**: Summarize and synthesize the provided paragraph to create a cohesive and informative paragraph that addresses the query.
Ensure the synthesis uses the vocabulary and writing style of the original paragraph to maintain a natural and consistent tone.
"""

SYNTHESIZE_REFINE = """\
You are a researcher writing a research paper.
**Existing Synthesis**: {response}
**New Paragraph**: {paragraph}
**Query**: {query}
**Instructions**: Integrate the information from the new paragraph into the existing synthesis to create a cohesive and informative paragraph that addresses the query.
Ensure the synthesis uses the vocabulary and writing style of the original paragraphs to maintain a natural and consistent tone.
"""

# Extra refine pass used only when the running draft outgrows its budget
# share; not part of the published template set.
SYNTHESIZE_CONDENSE = """\
You are a researcher writing a research paper.
**Existing Synthesis**: {response}
**Query**: {query}
**Instructions**: Condense the existing synthesis to roughly half its length while keeping every key finding, technical term, and citation marker intact.
Ensure the condensed synthesis uses the vocabulary and writing style of the original text to maintain a natural and consistent tone.
"""

LINE_ALIGNMENT = """\
For a given synthesized result based on some source paragraphs, find the relevant source lines that are most relevant to each line of the synthesized result.
Synthesized result: {synthesized_result}.
Source Paragraphs:  {context}.
Just provide the source lines for each line of synthesized result, for example: Synthesized Line: ... Corresponding Source Line: ...   Do not add explanation and source lines if they are not exactly relevant.
"""

# Pairwise variant of line alignment: one boolean judgment per
# (answer line, context line) pair.
LINE_PAIR_JUDGE = """\
Determine whether the source line directly supports the synthesized line.
Synthesized Line: {answer_line}
Source Line: {context_line}
Respond with 'True' or 'False'. Provide no additional explanation.
"""

SUMMARIZE_PARAGRAPH = """\
You are an experienced researcher. Summarize the following paragraph in 2-3 sentences preserving technical terms and any citation markers verbatim.
Paragraph: {paragraph}
"""

DATASET_GENERATION = """\
You are an expert research scientist.
Instructions: Create a list of 150 questions (max 5 at a time) that require using information from all three provided input documents (or at least two of the input documents). For each question, please include the following details:

Question: Formulate a question that integrates information from multiple documents.
Original Context Texts: Provide the exact contexts from the documents that were used to create the question, without any alterations.
Answer: Provide an answer for a research article derived from the original context texts.
Ensure that each question requires the synthesis of information from multiple documents. Maintain the integrity of the original context texts as they will be used later for evaluation purposes.
Return the response in the following python format:
data = [
    {
        "question": "Question 1",
        "context": ["Context 11", "Context 12"],
        "ground_truth": "Answer 1"
    },
    {
        "question": "Question 2",
        "context": ["Context 21", "Context 22"],
        "ground_truth": "Answer 2"
    },]


Please keep generating only if it is possible to generate unique questions that you did not generate them before. Generate 5 questions at a time. I want a total 150 questions.
"""

STATEMENT_EXTRACTION = """\
You are an experienced researcher. Break the following answer into a numbered list of short, self-contained factual statements. Return only the numbered list.
Answer: {answer}
"""

STATEMENT_SUPPORT_JUDGE = """\
Context: {context}
Statement: {statement}
Instructions: Determine whether the statement can be directly inferred from the context. Respond with 'True' or 'False'. Provide no additional explanation.
"""

PSEUDO_QUESTIONS = """\
You are an experienced researcher. Given the answer below, write {count} distinct questions that this answer would directly and completely answer. Return one question per line, with no numbering or explanation.
Answer: {answer}
"""

SENTENCE_RELEVANCE_JUDGE = """\
Question: {question}
Sentence: {sentence}
Instructions: Determine whether the sentence is relevant to answering the question. Respond with 'True' or 'False'. Provide no additional explanation.
"""

CONTEXT_RELEVANCE_JUDGE = """\
Question: {question}
Context: {context}
Instructions: Determine whether the context is relevant to answering the question. Respond with 'True' or 'False'. Provide no additional explanation.
"""

CONTEXT_ATTRIBUTION_JUDGE = """\
Context: {context}
Sentence: {sentence}
Instructions: Determine whether the sentence can be attributed to the context. Respond with 'True' or 'False'. Provide no additional explanation.
"""
