"""Builds the 100-example zero-shot fixture and its EN->JA translation table."""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
TOY = os.path.join(HERE, "..", "toy")

TEMPLATES = [
    ("department_management",
     "How many heads of the departments are older than {v}?",
     "SELECT count(*) FROM head WHERE age  >  {v}",
     "[[V0]]歳より年上の部長は何人いますか？",
     [str(n) for n in range(40, 80, 2)]),
    ("concert_singer",
     "Show the names of singers from {v}.",
     "SELECT name FROM singer WHERE country  =  '{v}'",
     "[[V0]]出身の歌手の名前を表示してください。",
     ["France", "Netherlands", "United States", "Japan", "Germany", "Spain", "Italy", "Brazil", "Canada", "Norway",
      "Sweden", "Chile", "Peru", "Kenya", "Egypt", "India", "China", "Korea", "Vietnam", "Mexico"]),
    ("pets_1",
     "Find the number of pets whose weight is heavier than {v}.",
     "SELECT count(*) FROM pets WHERE weight  >  {v}",
     "体重が[[V0]]より重いペットの数を求めてください。",
     [str(n) for n in range(11, 31)]),
    ("department_management",
     "List the names of departments with more than {v} employees.",
     "SELECT name FROM department WHERE num_employees  >  {v}",
     "従業員が[[V0]]人より多い部署の名前を列挙してください。",
     [str(n * 1000) for n in range(1, 21)]),
    ("pets_1",
     "Find the last name of the student whose first name is '{v}'.",
     "SELECT lname FROM student WHERE fname  =  '{v}'",
     "名が'[[V0]]'である学生の姓を求めてください。",
     ["Linda", "Tracy", "Shiela", "Dinesh", "Paul", "Andy", "Lisa", "Jandy", "Eric", "Derek",
      "David", "Steven", "Charles", "Susan", "Mark", "Bruce", "Michael", "Arthur", "Ian", "George"]),
]


def main():
    examples = []
    translations = []
    for t, (db, q, sql, ja, values) in enumerate(TEMPLATES):
        masked = q.replace("{v}", "[[V0]]")
        translations.append({"src": "en", "tgt": "ja", "text": masked, "output": ja})
        for i, v in enumerate(values):
            examples.append({
                "example_id": f"zs-{t}-{i:02d}",
                "db_id": db,
                "question": q.format(v=v),
                "query": sql.format(v=v),
            })
    assert len(examples) == 100

    en = json.load(open(os.path.join(TOY, "en", "tables.json"), encoding="utf-8"))
    ja = json.load(open(os.path.join(TOY, "ja", "tables.json"), encoding="utf-8"))
    names = {}
    for a, b in zip(en, ja):
        assert a["db_id"] == b["db_id"]
        for x, y in zip(a["table_names"], b["table_names"]):
            names[x] = y
        for (_, x), (_, y) in zip(a["column_names"], b["column_names"]):
            if x != "*":
                names[x] = y
    for x, y in sorted(names.items()):
        translations.append({"src": "en", "tgt": "ja", "text": x, "output": y})

    with open(os.path.join(HERE, "train.json"), "w", encoding="utf-8") as f:
        json.dump(examples, f, ensure_ascii=False, indent=1)
        f.write("\n")
    with open(os.path.join(HERE, "en_ja_fixture.json"), "w", encoding="utf-8") as f:
        json.dump({"version": "zeroshot-1", "translations": translations}, f, ensure_ascii=False, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
