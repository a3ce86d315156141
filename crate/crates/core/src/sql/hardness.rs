use serde::{Deserialize, Serialize};

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardness {
    Easy,
    Medium,
    Hard,
    Extra,
}

impl Hardness {
    pub const ALL: [Hardness; 4] = [Hardness::Easy, Hardness::Medium, Hardness::Hard, Hardness::Extra];

    pub fn as_str(self) -> &'static str {
        match self {
            Hardness::Easy => "easy",
            Hardness::Medium => "medium",
            Hardness::Hard => "hard",
            Hardness::Extra => "extra",
        }
    }
}

fn conditions(t: &SqlTree) -> [&Condition; 3] {
    [&t.from.conditions, &t.where_clause, &t.having]
}

fn component1(t: &SqlTree) -> usize {
    let mut n = usize::from(!t.where_clause.is_empty())
        + usize::from(!t.group_by.is_empty())
        + usize::from(t.order_by.is_some())
        + usize::from(t.limit.is_some())
        + t.from.tables.len().saturating_sub(1);
    for c in conditions(t) {
        n += c.conjs.iter().filter(|&&j| j == Conj::Or).count();
        n += c.units.iter().filter(|u| u.op == CondOp::Like).count();
    }
    n
}

fn component2(t: &SqlTree) -> usize {
    let mut n = usize::from(t.compound.is_some());
    for c in conditions(t) {
        for u in &c.units {
            n += std::iter::once(&u.first)
                .chain(u.second.as_ref())
                .filter(|v| matches!(v, Value::Subquery(_)))
                .count();
        }
    }
    n
}

fn others(t: &SqlTree) -> usize {
    let agg = |c: &ColUnit| usize::from(c.agg != AggOp::None);
    let mut aggs = t.select.items.iter().filter(|i| i.agg != AggOp::None).count();
    aggs += t.where_clause.units.iter().filter(|u| u.negated).count();
    aggs += t.group_by.iter().map(agg).sum::<usize>();
    if let Some(o) = &t.order_by {
        for v in &o.items {
            aggs += agg(&v.left) + v.right.as_ref().map_or(0, agg);
        }
    }
    aggs += t.having.units.iter().filter(|u| u.negated).count() + t.having.conjs.len();

    usize::from(aggs > 1)
        + usize::from(t.select.items.len() > 1)
        + usize::from(t.where_clause.units.len() > 1)
        + usize::from(t.group_by.len() > 1)
}

/// Difficulty bucket of a gold query, computed on the parsed tree as written.
pub fn hardness(tree: &SqlTree) -> Hardness {
    let (c1, c2, o) = (component1(tree), component2(tree), others(tree));
    if c1 <= 1 && o == 0 && c2 == 0 {
        Hardness::Easy
    } else if (o <= 2 && c1 <= 1 && c2 == 0) || (c1 <= 2 && o < 2 && c2 == 0) {
        Hardness::Medium
    } else if (o > 2 && c1 <= 2 && c2 == 0)
        || (2 < c1 && c1 <= 3 && o <= 2 && c2 == 0)
        || (c1 <= 1 && o == 0 && c2 <= 1)
    {
        Hardness::Hard
    } else {
        Hardness::Extra
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_schemas;
    use crate::sql::parse;

    fn h(sql: &str) -> Hardness {
        let text = r#"[{"db_id": "d", "table_names": ["a", "b"], "table_names_original": ["a", "b"],
            "column_names": [[-1, "*"], [0, "id"], [0, "y"], [1, "a_id"], [1, "z"]],
            "column_names_original": [[-1, "*"], [0, "id"], [0, "y"], [1, "a_id"], [1, "z"]],
            "column_types": ["text", "number", "number", "number", "text"], "primary_keys": [1], "foreign_keys": [[3, 1]]}]"#;
        let s = parse_schemas("t", text).unwrap().remove("d").unwrap();
        hardness(&parse(sql, &s).unwrap())
    }

    #[test]
    fn buckets() {
        assert_eq!(h("SELECT count(*) FROM a"), Hardness::Easy);
        assert_eq!(h("SELECT y FROM a WHERE id > 3"), Hardness::Easy);
        assert_eq!(h("SELECT y , id FROM a WHERE id > 3"), Hardness::Medium);
        assert_eq!(h("SELECT y FROM a WHERE id NOT IN (SELECT a_id FROM b)"), Hardness::Hard);
        assert_eq!(
            h("SELECT y , count(*) FROM a JOIN b ON a.id = b.a_id WHERE z LIKE '%x%' GROUP BY y ORDER BY y LIMIT 1"),
            Hardness::Extra
        );
    }

    #[test]
    fn order_is_by_difficulty() {
        assert!(Hardness::Easy < Hardness::Extra);
        assert_eq!(serde_json::to_value(Hardness::Medium).unwrap(), "medium");
    }
}
