use std::fmt::Write;

use super::ast::*;

/// Renders a tree as SQL with every column qualified by its table name and no
/// aliases. Parsing the output against the same schema yields the same tree.
pub fn to_sql(tree: &SqlTree) -> String {
    let mut out = String::new();
    write_sql(&mut out, tree);
    out
}

fn column(out: &mut String, c: &ColumnId) {
    match c {
        ColumnId::All => out.push('*'),
        ColumnId::Column { table, column } => {
            let _ = write!(out, "{table}.{column}");
        }
    }
}

fn col_unit(out: &mut String, u: &ColUnit) {
    if u.agg != AggOp::None {
        out.push_str(u.agg.keyword());
        out.push('(');
    }
    if u.distinct {
        out.push_str("DISTINCT ");
    }
    column(out, &u.column);
    if u.agg != AggOp::None {
        out.push(')');
    }
}

fn val_unit(out: &mut String, v: &ValUnit) {
    col_unit(out, &v.left);
    if let Some(r) = &v.right {
        let _ = write!(out, " {} ", v.op.symbol());
        col_unit(out, r);
    }
}

fn select_item(out: &mut String, item: &SelectItem) {
    if item.agg != AggOp::None {
        out.push_str(item.agg.keyword());
        out.push('(');
        val_unit(out, &item.value);
        out.push(')');
    } else if item.value.left.agg != AggOp::None || item.value.left.distinct {
        // keeps a leading aggregate or DISTINCT inside the value unit
        out.push('(');
        val_unit(out, &item.value);
        out.push(')');
    } else {
        val_unit(out, &item.value);
    }
}

fn number(out: &mut String, n: Number) {
    let v = n.get();
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        let _ = write!(out, "{}", v as i64);
    } else {
        let _ = write!(out, "{v}");
    }
}

fn value(out: &mut String, v: &Value) {
    match v {
        Value::Number(n) => number(out, *n),
        Value::Str(s) => {
            let _ = write!(out, "'{s}'");
        }
        Value::Column(c) => col_unit(out, c),
        Value::Subquery(t) => {
            out.push('(');
            write_sql(out, t);
            out.push(')');
        }
        Value::Masked => out.push_str("'value'"),
    }
}

fn condition(out: &mut String, c: &Condition) {
    for (i, u) in c.units.iter().enumerate() {
        if i > 0 {
            out.push_str(match c.conjs.get(i - 1) {
                Some(Conj::Or) => " OR ",
                _ => " AND ",
            });
        }
        val_unit(out, &u.lhs);
        if u.negated {
            out.push_str(" NOT");
        }
        let _ = write!(out, " {} ", u.op.token());
        value(out, &u.first);
        if let Some(second) = &u.second {
            out.push_str(" AND ");
            value(out, second);
        }
    }
}

fn write_sql(out: &mut String, t: &SqlTree) {
    out.push_str("SELECT ");
    if t.select.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in t.select.items.iter().enumerate() {
        if i > 0 {
            out.push_str(" , ");
        }
        select_item(out, item);
    }
    out.push_str(" FROM ");
    for (i, unit) in t.from.tables.iter().enumerate() {
        match unit {
            TableUnit::Table(name) => {
                if i > 0 {
                    out.push_str(" JOIN ");
                }
                out.push_str(name);
            }
            TableUnit::Subquery(sub) => {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                write_sql(out, sub);
                out.push(')');
            }
        }
    }
    if !t.from.conditions.is_empty() {
        out.push_str(" ON ");
        condition(out, &t.from.conditions);
    }
    if !t.where_clause.is_empty() {
        out.push_str(" WHERE ");
        condition(out, &t.where_clause);
    }
    if !t.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        for (i, g) in t.group_by.iter().enumerate() {
            if i > 0 {
                out.push_str(" , ");
            }
            col_unit(out, g);
        }
    }
    if !t.having.is_empty() {
        out.push_str(" HAVING ");
        condition(out, &t.having);
    }
    if let Some(order) = &t.order_by {
        out.push_str(" ORDER BY");
        for (i, v) in order.items.iter().enumerate() {
            out.push_str(if i > 0 { " , " } else { " " });
            val_unit(out, v);
        }
        if !order.items.is_empty() {
            out.push_str(match order.direction {
                Direction::Asc => " ASC",
                Direction::Desc => " DESC",
            });
        }
    }
    if let Some(n) = t.limit {
        let _ = write!(out, " LIMIT {n}");
    }
    if let Some((op, rhs)) = &t.compound {
        let _ = write!(out, " {} ", op.keyword());
        write_sql(out, rhs);
    }
}
