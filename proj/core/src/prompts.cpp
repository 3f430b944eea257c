#include "s2k/prompts.hpp"

#include "s2k/error.hpp"

namespace s2k::prompts {

const std::string_view kMetaQuestion =
    R"TPL(You are a professional question-generation expert with a focus on academic and technical texts.

## Task:
Carefully read the provided document chunk and generate **exactly one knowledge-based, specific, and self-contained question**. The question must:
1. Be directly answerable using only the content from the chunk.
2. Reflect representative or meaningful knowledge contained in the chunk — not superficial, vague, or structural elements.
3. Be expressed in formal, academic language, precise and clear.

## Rules:
1. The question must be fully self-contained and understandable without access to the original chunk.
2. Do **NOT** use context-dependent phrases like: "as described in the text", "according to the passage", "in the document", "from the chunk"
3. Add necessary information to the question to ensure that it can be independently understood. (Bad Case: What are the symptoms described in the text? Good Case: What are the typical symptoms of generalized anxiety disorder?)
4. If the chunk lacks sufficient knowledge content or contains only general statements, structural formatting, or introductory language, return the JSON format with an **empty question string**.
5. Avoid vague or incomplete questions like "What does X refer to?"
6. If necessary, add contextual qualifiers (e.g., domain, subject, scope) to the question to ensure it is fully understandable without seeing the original chunk.
7. Favor questions that involve comparisons, causes, functions, conditions, or processes over basic definitional questions.
8. If possible, vary the question style (e.g., what, why, how), but keep it answerable solely from the chunk.

## Output Format:
Only respond in this strict JSON format, without any extra text, markdown, or commentary:

``` json
{{
  "question": "Your single knowledge-based question here — or an empty string if no meaningful question can be asked."
}}
```

## Document:
{article_text})TPL";

const std::string_view kInductive =
    R"TPL(### General Instruction
You are an advanced question generation model that aims to generate case questions that require inductive reasoning based on multiple instances or observations in the text. Your task is to generate a question that requires synthesizing information from the provided factual questions and their corresponding texts. The question must be complete and understandable without requiring external information.

### Reasoning Type Requirement: Inductive reasoning
A "Instruction" questions involve presenting a realistic scenario where the rules must come directly from the text (e.g., definitions, theorems, taxonomies). The scenario should be coherent and plausible in the context of the given information. Not all input information needs to be used; select the most relevant parts to construct a meaningful question.

### Question Type Requirement: Multiple choice
The generated questions should be presented in the form of multiple-choice questions with **four options (A, B, C, D)**, only one of which is correct. The correct answer can directly match the inevitable conclusion in the rule, and the statement should be clear and avoid vague words. Make sure the distractors seem reasonable, but are obviously different from the correct answer.

### Additional Notes
1. Use clear and concise language to present the scenario.
2. Avoid unnecessary complexity, but ensure the question requires reasoning beyond direct retrieval.
3. Make sure the question is self-contained and understandable without additional context, that is, you can understand without using the content in the text.

### Example Format:
Input:
1. What role do natural killer (NK) cells play in immunosurveillance? (Text: Natural killer (NK) cells play a critical role in the immune response against tumors by killing cancer cells through perforin-mediated cytotoxicity, which is essential for immunosurveillance in the body. This process helps to limit tumor progression, making NK cells important in the study of cancer prognosis.)
2. Which cluster of differentiation marker is used to identify natural killer (NK) cells in tissue samples? (Text: CD56 is a surface marker specific to natural killer (NK) cells and is used to identify and isolate these cells in tissue samples, such as those from resected lung cancer specimens. Therefore, CD56 is the appropriate cluster of diff rentiation marker to study tumor infiltration by NK cells in cancer research.)

Output:
In a suburban town in Virginia, epidemiologists are alarmed by the increasing number of squamous cell lung cancer cases. Further investigation reveals that most people in the area work in a glass factory, the regions main source of employment. A researcher is interested in studying the role of immunosurveillance in the pathogenesis of this lung cancer. He postulates that tumor infiltration by natural killer (NK) cells has a better prognosis since they play a major role in immunosurveillance. NK cells also kill tumor cells by the perforin-mediated destruction of cancerous cells. The researcher is interested in studying tumor infiltration by NK cells in the resected specimen from patients within the cohort who have been diagnosed with stage 1 lung cancer. Which of the following cluster of differentiation markers will he need to use to identify these cells in the resected specimens?
A. CD20
B. CD3
C. CD34
D. CD56
Correct Answer: D

### Input:
{meta_knowledge_from_sampling}

Now start generating one question based on the given input.)TPL";

const std::string_view kDeductive =
    R"TPL(### General Instruction
You are an advanced question generation model that aims to generate case questions that require deductive reasoning based on the knowledge points in the question and the general rules or definitions in the text. You need to extract clear rules from the text and design a realistic scenario that requires users to solve the problem through logical deduction from general to specific.

### Reasoning Type Requirement: Deductive reasoning
A "deductive" question involves presenting a realistic scenario where information from the provided texts must be applied to diagnose, explain, or solve a specific problem. The scenario should be coherent and plausible within the context of the given information. Not all input information needs to be used; select the most relevant parts to construct a meaningful question.

### Question Type Requirement: Multiple Choice The generated question should be presented as a multiple-choice question with **four options (A, B, C, D)**, where only one option is correct. Ensure the distractors are plausible but clearly distinguishable from the correct answer. The user should be able to choose the correct answer by synthesizing information from the provided factual questions and texts.

### Additional Notes
1. Use clear and concise language to present the scenario.
2. Avoid unnecessary complexity, but ensure the question requires reasoning beyond direct retrieval.
3. Make sure the question is self-contained and understandable without additional context.

### Example Format:

Input:
1. What are the four primary features of tetralogy of Fallot? (Text: Tetralogy of Fallot is a congenital heart defect characterized by four primary features: ventricular septal defect (VSD), pulmonary stenosis, right ventricular hypertrophy (RVH), and overriding aorta. These abnormalities can lead to cyanosis, particularly during episodes of increased oxygen demand, such as feeding or crying.)
2. Why is right axis deviation a common finding on the electrocardiogram (ECG) of patients with tetralogy of Fallot? (Text: In patients with tetralogy of Fallot, the electrocardiogram (ECG) commonly shows right axis deviation due to the right ventricular hypertrophy (RVH) that develops as a result of the obstruction to blood flow through the pulmonary valve. This feature is characteristic of the condition and helps to differentiate it from other congenital heart defects.)

Output:
A 6-month-old girl presents with cyanosis of the lips during feeding. The father reports that the child has similar brief episodes during activity. Physical examination reveals that the child's lips and fingers have cyanosis induced by crying during ear examination. Based on the diagnostic criteria for tetralogy of Fallot, which of the following features is most likely to be shown on the child's electrocardiogram?
A. Left ventricular hypertrophy
B. ST segment depression
C. Widened QRS complex
D. Right axis deviation
Correct Answer: D

### Input: {meta_knowledge_from_sampling}

Now start generating one question based on the given input.)TPL";

const std::string_view kCaseBased =
    R"TPL(### General Instruction
You are an advanced question generation model designed to create comprehensive reasoning questions based on factual questions and their corresponding text passages. Your task is to generate a question that requires synthesizing information from the provided factual questions and their corresponding texts. The question must be complete and understandable without requiring external information.

### Reasoning Type Requirement: Case
A "Case" question involves presenting a realistic scenario where information from the provided texts must be applied to diagnose, explain, or solve a specific problem. The scenario should be coherent and plausible within the context of the given information. Not all input information needs to be used; select the most relevant parts to construct a meaningful question.

### Question Type Requirement: Long form
The generated question should be presented as a long form. The user should be able to answer by synthesizing information from the provided factual questions and texts.

### Additional Notes
1. Use clear and concise language to present the scenario.
2. Avoid unnecessary complexity, but ensure the question requires reasoning beyond direct retrieval.
3. Make sure the question is self-contained and understandable without additional context.

### Example Format:

Input:
1. What is the infectious form of the prion protein associated with scrapie called? (Text: The infectious form of the prion protein associated with scrapie is PrPSc, which is misfolded and can induce other proteins to misfold as well.)
2. What is the role of myoglobin in muscle cells concerning oxygen management? (Text: Myoglobin serves as an oxygen storage molecule in muscle cells, allowing oxygen to be available during periods of intense activity.)

Output:
A 55-year-old sheep farmer reports that several of his sheep are exhibiting unusual symptoms such as tremors, lack of coordination, and intense itching that leads to wool loss. Additionally, he mentions feeling tired quickly during routine tasks such as herding the sheep. The farmer is concerned that the symptoms may be related to some infectious agent present on the farm. Based on the symptoms described and the information provided, what could be the cause of the sheep's condition?
Correct Answer: The cause of the sheep's condition is a parasitic infestation affecting the nervous system

### Input:
{meta_knowledge_from_sampling}

Now start generating one question based on the given input.)TPL";

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out += '{';
      ++i;
    } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += '}';
      ++i;
    } else if (c == '{') {
      auto close = tmpl.find('}', i);
      if (close == std::string_view::npos) throw PreconditionError("template: unterminated placeholder");
      std::string name(tmpl.substr(i + 1, close - i - 1));
      auto it = values.find(name);
      if (it == values.end()) throw PreconditionError("template: no value for {" + name + "}");
      out += it->second;
      i = close;
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace s2k::prompts
