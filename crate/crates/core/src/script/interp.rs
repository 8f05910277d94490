use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::FailureCategory;
use crate::model::{validate_model, BooleanOp, CADModel, CurveCmd, Extrude, Face, Loop, Point2, SEPair, Sketch, Vec3};
use crate::model::types::EPS_CLOSE;

use super::ast::{BinOp, Expr, ExprKind, ScriptAst, Stmt, StmtKind, Target};
use super::lexer::Span;
use super::{ExecLimits, ScriptError, MATH_CONSTANTS, MATH_FUNCTIONS, METHODS};

const CONSTRUCTORS: &[&str] = &["Loop", "Face", "Sketch", "Extrude", "CADModel"];
const BUILTINS: &[&str] = &["range", "len", "abs", "min", "max", "float", "int", "round"];

#[derive(Debug, Default)]
struct LoopB {
    start: Option<Point2>,
    pen: Point2,
    curves: Vec<CurveCmd>,
    closed: bool,
}

#[derive(Debug, Default)]
struct FaceB {
    loops: Vec<Rc<RefCell<LoopB>>>,
}

#[derive(Debug)]
struct SketchB {
    origin: Vec3,
    x_axis: Vec3,
    normal: Vec3,
    faces: Vec<Rc<RefCell<FaceB>>>,
}

#[derive(Debug)]
struct PairB {
    sketch: Rc<RefCell<SketchB>>,
    extrude: Extrude,
    op: BooleanOp,
}

#[derive(Debug, Default)]
struct ModelB {
    pairs: Vec<PairB>,
}

/// Runtime values. Builders are shared references, so a loop mutated after
/// being added to a face is seen through the face as well.
#[derive(Clone, Debug)]
enum Value {
    Num(f64),
    Bool(bool),
    None,
    Str(Rc<str>),
    List(Rc<RefCell<Vec<Value>>>),
    Tuple(Rc<[Value]>),
    Range { start: i64, stop: i64, step: i64 },
    Loop(Rc<RefCell<LoopB>>),
    Face(Rc<RefCell<FaceB>>),
    Sketch(Rc<RefCell<SketchB>>),
    Extrude(Extrude),
    Model(Rc<RefCell<ModelB>>),
    Func(&'static str),
    Method(Box<Value>, &'static str),
    Module(&'static str),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "bool",
            Value::None => "None",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Range { .. } => "range",
            Value::Loop(_) => "Loop",
            Value::Face(_) => "Face",
            Value::Sketch(_) => "Sketch",
            Value::Extrude(_) => "Extrude",
            Value::Model(_) => "CADModel",
            Value::Func(_) => "function",
            Value::Method(..) => "method",
            Value::Module(_) => "module",
        }
    }
}

fn range_len(start: i64, stop: i64, step: i64) -> i64 {
    if step > 0 && start < stop {
        (stop - start + step - 1) / step
    } else if step < 0 && start > stop {
        (start - stop - step - 1) / -step
    } else {
        0
    }
}

fn lookup_static(name: &str, table: &[&'static str]) -> Option<&'static str> {
    table.iter().copied().find(|n| *n == name)
}

struct Interp<'l> {
    env: HashMap<String, Value>,
    limits: &'l ExecLimits,
    steps: u64,
    iters: u64,
    curves: u64,
}

type R<T> = Result<T, ScriptError>;

fn eval_err(msg: impl Into<String>, span: Span) -> ScriptError {
    ScriptError::at(FailureCategory::Evaluation, msg.into(), span)
}

impl<'l> Interp<'l> {
    fn new(limits: &'l ExecLimits) -> Self {
        let mut env = HashMap::new();
        for &c in CONSTRUCTORS.iter().chain(BUILTINS).chain(MATH_FUNCTIONS) {
            env.insert(c.to_string(), Value::Func(c));
        }
        for &c in MATH_CONSTANTS {
            env.insert(c.to_string(), Value::Num(math_constant(c)));
        }
        env.insert("math".into(), Value::Module("math"));
        Interp { env, limits, steps: 0, iters: 0, curves: 0 }
    }

    fn step(&mut self, span: Span) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(ScriptError::at(
                FailureCategory::Resource,
                format!("step limit of {} exceeded", self.limits.max_steps),
                span,
            ));
        }
        Ok(())
    }

    fn add_curve(&mut self, span: Span) -> R<()> {
        self.curves += 1;
        if self.curves > self.limits.max_curves {
            return Err(ScriptError::at(
                FailureCategory::Resource,
                format!("curve limit of {} exceeded", self.limits.max_curves),
                span,
            ));
        }
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> R<()> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> R<()> {
        self.step(s.span)?;
        match &s.kind {
            StmtKind::Pass => Ok(()),
            StmtKind::Import { module, names, alias } => self.import(module, names, alias.as_deref(), s.span),
            StmtKind::Expr(e) => self.eval(e).map(|_| ()),
            StmtKind::Assign { targets, value } => {
                let v = self.eval(value)?;
                for t in targets {
                    self.assign(t, v.clone(), s.span)?;
                }
                Ok(())
            }
            StmtKind::AugAssign { name, op, value } => {
                let cur = self
                    .env
                    .get(name)
                    .cloned()
                    .ok_or_else(|| eval_err(format!("name '{name}' is not defined"), s.span))?;
                let rhs = self.eval(value)?;
                let v = self.binary(*op, cur, rhs, s.span)?;
                self.env.insert(name.clone(), v);
                Ok(())
            }
            StmtKind::For { target, iter, body } => {
                let it = self.eval(iter)?;
                match it {
                    Value::Range { start, stop, step } => {
                        let n = range_len(start, stop, step);
                        for k in 0..n {
                            self.tick_iter(s.span)?;
                            self.assign(target, Value::Num((start + k * step) as f64), s.span)?;
                            self.block(body)?;
                        }
                    }
                    Value::List(items) => {
                        // Python iterates a live list; appending inside the body extends it.
                        let mut k = 0;
                        loop {
                            let item = items.borrow().get(k).cloned();
                            let Some(item) = item else { break };
                            self.tick_iter(s.span)?;
                            self.assign(target, item, s.span)?;
                            self.block(body)?;
                            k += 1;
                        }
                    }
                    Value::Tuple(items) => {
                        for item in items.iter() {
                            self.tick_iter(s.span)?;
                            self.assign(target, item.clone(), s.span)?;
                            self.block(body)?;
                        }
                    }
                    other => return Err(eval_err(format!("cannot iterate over {}", other.type_name()), iter.span)),
                }
                Ok(())
            }
        }
    }

    fn tick_iter(&mut self, span: Span) -> R<()> {
        self.iters += 1;
        if self.iters > self.limits.max_loop_iters {
            return Err(ScriptError::at(
                FailureCategory::Resource,
                format!("loop iteration limit of {} exceeded", self.limits.max_loop_iters),
                span,
            ));
        }
        Ok(())
    }

    fn import(&mut self, module: &str, names: &[(String, String)], alias: Option<&str>, span: Span) -> R<()> {
        if names.is_empty() {
            let m = if module == "math" { "math" } else { "CADLib" };
            self.env.insert(alias.unwrap_or(module).to_string(), Value::Module(m));
            return Ok(());
        }
        let exported: Vec<&'static str> = if module == "math" {
            MATH_FUNCTIONS.iter().chain(MATH_CONSTANTS).copied().collect()
        } else {
            CONSTRUCTORS.to_vec()
        };
        for (name, alias) in names {
            if name == "*" {
                for &n in &exported {
                    self.env.insert(n.to_string(), module_attr(n));
                }
                continue;
            }
            let Some(n) = lookup_static(name, &exported) else {
                return Err(eval_err(format!("cannot import name '{name}' from '{module}'"), span));
            };
            self.env.insert(alias.clone(), module_attr(n));
        }
        Ok(())
    }

    fn assign(&mut self, t: &Target, v: Value, span: Span) -> R<()> {
        match t {
            Target::Name(n) => {
                self.env.insert(n.clone(), v);
                Ok(())
            }
            Target::Tuple(ts) => {
                let items: Vec<Value> = match &v {
                    Value::Tuple(items) => items.to_vec(),
                    Value::List(items) => items.borrow().clone(),
                    other => return Err(eval_err(format!("cannot unpack {}", other.type_name()), span)),
                };
                if items.len() != ts.len() {
                    return Err(eval_err(
                        format!("expected {} values to unpack, got {}", ts.len(), items.len()),
                        span,
                    ));
                }
                for (t, v) in ts.iter().zip(items) {
                    self.assign(t, v, span)?;
                }
                Ok(())
            }
            Target::Index { value, index } => {
                let container = self.eval(value)?;
                let idx = self.eval(index)?;
                let Value::List(items) = container else {
                    return Err(eval_err(format!("{} does not support item assignment", container.type_name()), span));
                };
                let len = items.borrow().len();
                let k = self.index_of(&idx, len, index.span)?;
                items.borrow_mut()[k] = v;
                Ok(())
            }
        }
    }

    fn index_of(&self, idx: &Value, len: usize, span: Span) -> R<usize> {
        let i = as_int(idx).ok_or_else(|| eval_err("indices must be integers", span))?;
        let k = if i < 0 { i + len as i64 } else { i };
        if k < 0 || k >= len as i64 {
            return Err(eval_err("index out of range", span));
        }
        Ok(k as usize)
    }

    fn eval(&mut self, e: &Expr) -> R<Value> {
        self.step(e.span)?;
        match &e.kind {
            ExprKind::Num(v) => Ok(Value::Num(*v)),
            ExprKind::Str(s) => Ok(Value::Str(s.as_str().into())),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::None => Ok(Value::None),
            ExprKind::Name(n) => {
                self.env.get(n).cloned().ok_or_else(|| eval_err(format!("name '{n}' is not defined"), e.span))
            }
            ExprKind::List(items) => {
                let vs = items.iter().map(|i| self.eval(i)).collect::<R<Vec<_>>>()?;
                Ok(Value::List(Rc::new(RefCell::new(vs))))
            }
            ExprKind::Tuple(items) => {
                let vs = items.iter().map(|i| self.eval(i)).collect::<R<Vec<_>>>()?;
                Ok(Value::Tuple(vs.into()))
            }
            ExprKind::Neg(inner) => {
                let v = self.eval(inner)?;
                let x = as_num(&v).ok_or_else(|| eval_err(format!("bad operand for unary -: {}", v.type_name()), e.span))?;
                Ok(Value::Num(-x))
            }
            ExprKind::Pos(inner) => {
                let v = self.eval(inner)?;
                let x = as_num(&v).ok_or_else(|| eval_err(format!("bad operand for unary +: {}", v.type_name()), e.span))?;
                Ok(Value::Num(x))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                self.binary(*op, a, b, e.span)
            }
            ExprKind::Attr { value, name } => {
                let v = self.eval(value)?;
                self.attr(v, name, e.span)
            }
            ExprKind::Index { value, index } => {
                let c = self.eval(value)?;
                let i = self.eval(index)?;
                match c {
                    Value::List(items) => {
                        let items = items.borrow();
                        let k = self.index_of(&i, items.len(), index.span)?;
                        Ok(items[k].clone())
                    }
                    Value::Tuple(items) => {
                        let k = self.index_of(&i, items.len(), index.span)?;
                        Ok(items[k].clone())
                    }
                    Value::Range { start, stop, step } => {
                        let k = self.index_of(&i, range_len(start, stop, step) as usize, index.span)?;
                        Ok(Value::Num((start + k as i64 * step) as f64))
                    }
                    other => Err(eval_err(format!("{} is not subscriptable", other.type_name()), e.span)),
                }
            }
            ExprKind::Call { func, args, kwargs } => {
                let f = self.eval(func)?;
                let args = args.iter().map(|a| self.eval(a)).collect::<R<Vec<_>>>()?;
                let mut kw = Vec::with_capacity(kwargs.len());
                for (k, v) in kwargs {
                    kw.push((k.as_str(), self.eval(v)?));
                }
                self.call(f, args, kw, e.span)
            }
        }
    }

    fn attr(&self, v: Value, name: &str, span: Span) -> R<Value> {
        if let Value::Module(m) = v {
            let found = if m == "math" {
                lookup_static(name, MATH_FUNCTIONS).or_else(|| lookup_static(name, MATH_CONSTANTS))
            } else {
                lookup_static(name, CONSTRUCTORS)
            };
            return found
                .map(module_attr)
                .ok_or_else(|| eval_err(format!("module '{m}' has no attribute '{name}'"), span));
        }
        let allowed: &[&str] = match &v {
            Value::Loop(_) => &["moveTo", "lineTo", "arcTo", "close", "circle"],
            Value::Face(_) => &["addLoop"],
            Value::Sketch(_) => &["addFace"],
            Value::Model(_) => &["addSE"],
            Value::List(_) => &["append"],
            _ => &[],
        };
        match (allowed.contains(&name), lookup_static(name, METHODS)) {
            (true, Some(m)) => Ok(Value::Method(Box::new(v), m)),
            _ => Err(eval_err(format!("'{}' object has no attribute '{name}'", v.type_name()), span)),
        }
    }

    fn binary(&self, op: BinOp, a: Value, b: Value, span: Span) -> R<Value> {
        if op == BinOp::Add {
            match (&a, &b) {
                (Value::List(x), Value::List(y)) => {
                    let mut out = x.borrow().clone();
                    out.extend(y.borrow().iter().cloned());
                    return Ok(Value::List(Rc::new(RefCell::new(out))));
                }
                (Value::Tuple(x), Value::Tuple(y)) => {
                    return Ok(Value::Tuple(x.iter().chain(y.iter()).cloned().collect()));
                }
                _ => {}
            }
        }
        let (Some(x), Some(y)) = (as_num(&a), as_num(&b)) else {
            return Err(eval_err(
                format!("unsupported operand types for {}: {} and {}", op.symbol(), a.type_name(), b.type_name()),
                span,
            ));
        };
        let zero_div = || eval_err("division by zero", span);
        let r = match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => {
                if y == 0.0 {
                    return Err(zero_div());
                }
                x / y
            }
            BinOp::FloorDiv => {
                if y == 0.0 {
                    return Err(zero_div());
                }
                (x / y).floor()
            }
            BinOp::Mod => {
                if y == 0.0 {
                    return Err(zero_div());
                }
                x - y * (x / y).floor()
            }
            BinOp::Pow => {
                if x == 0.0 && y < 0.0 {
                    return Err(zero_div());
                }
                x.powf(y)
            }
        };
        finite(r, span)
    }

    fn call(&mut self, f: Value, args: Vec<Value>, kw: Vec<(&str, Value)>, span: Span) -> R<Value> {
        match f {
            Value::Func(name) => self.call_func(name, args, kw, span),
            Value::Method(recv, name) => self.call_method(*recv, name, args, kw, span),
            other => Err(eval_err(format!("'{}' object is not callable", other.type_name()), span)),
        }
    }

    fn call_func(&mut self, name: &'static str, args: Vec<Value>, kw: Vec<(&str, Value)>, span: Span) -> R<Value> {
        match name {
            "Loop" => {
                bind(name, args, kw, &[], span)?;
                Ok(Value::Loop(Rc::default()))
            }
            "Face" => {
                bind(name, args, kw, &[], span)?;
                Ok(Value::Face(Rc::default()))
            }
            "CADModel" => {
                bind(name, args, kw, &[], span)?;
                Ok(Value::Model(Rc::default()))
            }
            "Sketch" => {
                let a = bind(name, args, kw, &[("origin", true), ("x_axis", true), ("normal", true)], span)?;
                let v = |i: usize, d: Vec3| a[i].as_ref().map_or(Ok(d), |v| as_vec3(v, span));
                Ok(Value::Sketch(Rc::new(RefCell::new(SketchB {
                    origin: v(0, Vec3::ZERO)?,
                    x_axis: v(1, Vec3::X)?,
                    normal: v(2, Vec3::Z)?,
                    faces: Vec::new(),
                }))))
            }
            "Extrude" => {
                let a = bind(name, args, kw, &[("distance", false)], span)?;
                let d = a[0].clone().expect("required");
                let e = match &d {
                    Value::Tuple(_) | Value::List(_) => {
                        let v = seq(&d).expect("sequence");
                        if v.len() != 2 {
                            return Err(eval_err("Extrude distance pair must have two entries", span));
                        }
                        Extrude::new(num(&v[0], span)?, num(&v[1], span)?)
                    }
                    other => {
                        let x = num(other, span)?;
                        if x >= 0.0 {
                            Extrude::new(x, 0.0)
                        } else {
                            Extrude::new(0.0, -x)
                        }
                    }
                };
                Ok(Value::Extrude(e))
            }
            "range" => {
                if !kw.is_empty() || args.is_empty() || args.len() > 3 {
                    return Err(eval_err("range expects 1 to 3 positional arguments", span));
                }
                let ints = args
                    .iter()
                    .map(|a| as_int(a).ok_or_else(|| eval_err("range arguments must be integers", span)))
                    .collect::<R<Vec<_>>>()?;
                let (start, stop, step) = match ints.as_slice() {
                    [n] => (0, *n, 1),
                    [a, b] => (*a, *b, 1),
                    [a, b, c] => (*a, *b, *c),
                    _ => unreachable!(),
                };
                if step == 0 {
                    return Err(eval_err("range step must not be zero", span));
                }
                Ok(Value::Range { start, stop, step })
            }
            "len" => {
                let a = bind(name, args, kw, &[("obj", false)], span)?;
                let n = match a[0].as_ref().expect("required") {
                    Value::List(v) => v.borrow().len() as i64,
                    Value::Tuple(v) => v.len() as i64,
                    Value::Str(s) => s.chars().count() as i64,
                    Value::Range { start, stop, step } => range_len(*start, *stop, *step),
                    other => return Err(eval_err(format!("{} has no len()", other.type_name()), span)),
                };
                Ok(Value::Num(n as f64))
            }
            "abs" | "float" => {
                let a = bind(name, args, kw, &[("x", false)], span)?;
                let x = num(a[0].as_ref().expect("required"), span)?;
                Ok(Value::Num(if name == "abs" { x.abs() } else { x }))
            }
            "int" => {
                let a = bind(name, args, kw, &[("x", false)], span)?;
                Ok(Value::Num(num(a[0].as_ref().expect("required"), span)?.trunc()))
            }
            "round" => {
                let a = bind(name, args, kw, &[("number", false), ("ndigits", true)], span)?;
                let x = num(a[0].as_ref().expect("required"), span)?;
                match &a[1] {
                    None | Some(Value::None) => Ok(Value::Num(x.round_ties_even())),
                    Some(d) => {
                        let d = as_int(d).ok_or_else(|| eval_err("ndigits must be an integer", span))?;
                        let s = 10f64.powi(d.clamp(-308, 308) as i32);
                        finite((x * s).round_ties_even() / s, span)
                    }
                }
            }
            "min" | "max" => {
                if !kw.is_empty() {
                    return Err(eval_err(format!("{name}() takes no keyword arguments"), span));
                }
                let items = if args.len() == 1 {
                    seq(&args[0]).ok_or_else(|| eval_err(format!("{name}() argument must be a sequence"), span))?
                } else {
                    args
                };
                let mut best: Option<f64> = None;
                for v in &items {
                    let x = num(v, span)?;
                    best = Some(match best {
                        None => x,
                        Some(b) if (name == "min" && x < b) || (name == "max" && x > b) => x,
                        Some(b) => b,
                    });
                }
                best.map(Value::Num).ok_or_else(|| eval_err(format!("{name}() of an empty sequence"), span))
            }
            _ => self.call_math(name, args, kw, span),
        }
    }

    fn call_math(&mut self, name: &'static str, args: Vec<Value>, kw: Vec<(&str, Value)>, span: Span) -> R<Value> {
        if !kw.is_empty() {
            return Err(eval_err(format!("{name}() takes no keyword arguments"), span));
        }
        let xs = args.iter().map(|a| num(a, span)).collect::<R<Vec<_>>>()?;
        let arity = match name {
            "atan2" | "pow" => 2,
            "hypot" => xs.len().max(1),
            "log" if xs.len() == 2 => 2,
            _ => 1,
        };
        if xs.len() != arity {
            return Err(eval_err(format!("{name}() takes {arity} argument(s), got {}", xs.len()), span));
        }
        let domain = |ok: bool| if ok { Ok(()) } else { Err(eval_err(format!("math domain error in {name}()"), span)) };
        let x = xs[0];
        let r = match name {
            "sin" => x.sin(),
            "cos" => x.cos(),
            "tan" => x.tan(),
            "asin" => {
                domain((-1.0..=1.0).contains(&x))?;
                x.asin()
            }
            "acos" => {
                domain((-1.0..=1.0).contains(&x))?;
                x.acos()
            }
            "atan" => x.atan(),
            "atan2" => x.atan2(xs[1]),
            "sqrt" => {
                domain(x >= 0.0)?;
                x.sqrt()
            }
            "radians" => x.to_radians(),
            "degrees" => x.to_degrees(),
            "hypot" => xs.iter().map(|v| v * v).sum::<f64>().sqrt(),
            "floor" => x.floor(),
            "ceil" => x.ceil(),
            "fabs" => x.abs(),
            "exp" => x.exp(),
            "log" => {
                domain(x > 0.0)?;
                if xs.len() == 2 {
                    domain(xs[1] > 0.0 && xs[1] != 1.0)?;
                    x.ln() / xs[1].ln()
                } else {
                    x.ln()
                }
            }
            "pow" => {
                domain(!(x == 0.0 && xs[1] < 0.0))?;
                x.powf(xs[1])
            }
            _ => return Err(eval_err(format!("'{name}' is not callable"), span)),
        };
        if r.is_nan() {
            return Err(eval_err(format!("math domain error in {name}()"), span));
        }
        finite(r, span)
    }

    fn call_method(&mut self, recv: Value, name: &'static str, args: Vec<Value>, kw: Vec<(&str, Value)>, span: Span) -> R<Value> {
        match (&recv, name) {
            (Value::Loop(lp), "moveTo") => {
                let a = bind(name, args, kw, &[("x", false), ("y", false)], span)?;
                let p = Point2::new(num(a[0].as_ref().unwrap(), span)?, num(a[1].as_ref().unwrap(), span)?);
                let mut b = lp.borrow_mut();
                if !b.curves.is_empty() || b.closed {
                    return Err(eval_err("moveTo after drawing has started", span));
                }
                b.start = Some(p);
                b.pen = p;
            }
            (Value::Loop(lp), "lineTo") | (Value::Loop(lp), "arcTo") => {
                let params: &[(&str, bool)] = if name == "lineTo" {
                    &[("x", false), ("y", false), ("relative", true)]
                } else {
                    &[("x", false), ("y", false), ("degrees", false), ("clockwise", true), ("relative", true)]
                };
                let a = bind(name, args, kw, params, span)?;
                let p = Point2::new(num(a[0].as_ref().unwrap(), span)?, num(a[1].as_ref().unwrap(), span)?);
                let relative = a.last().unwrap().as_ref().map_or(Ok(false), |v| flag(v, span))?;
                self.add_curve(span)?;
                let mut b = lp.borrow_mut();
                if b.closed {
                    return Err(eval_err(format!("{name} on a closed loop"), span));
                }
                if b.start.is_none() {
                    b.start = Some(Point2::new(0.0, 0.0));
                }
                let end = if relative { b.pen + p } else { p };
                let cmd = if name == "lineTo" {
                    CurveCmd::Line { end: p, relative }
                } else {
                    let sweep = num(a[2].as_ref().unwrap(), span)?;
                    let clockwise = a[3].as_ref().map_or(Ok(false), |v| flag(v, span))?;
                    CurveCmd::Arc { end: p, sweep, clockwise, relative }
                };
                b.curves.push(cmd);
                b.pen = end;
            }
            (Value::Loop(lp), "close") => {
                bind(name, args, kw, &[], span)?;
                let needs_line = {
                    let b = lp.borrow();
                    let start = b.start.unwrap_or(Point2::new(0.0, 0.0));
                    !b.closed && !b.curves.is_empty() && b.pen.dist(start) > EPS_CLOSE
                };
                if needs_line {
                    self.add_curve(span)?;
                }
                let mut b = lp.borrow_mut();
                let start = *b.start.get_or_insert(Point2::new(0.0, 0.0));
                if needs_line {
                    b.curves.push(CurveCmd::Line { end: start, relative: false });
                    b.pen = start;
                }
                b.closed = true;
            }
            (Value::Loop(lp), "circle") => {
                let a = bind(name, args, kw, &[("radius", false)], span)?;
                let r = num(a[0].as_ref().unwrap(), span)?;
                self.add_curve(span)?;
                let mut b = lp.borrow_mut();
                if !b.curves.is_empty() || b.closed {
                    return Err(eval_err("circle must be the only curve of its loop", span));
                }
                if b.start.is_none() {
                    b.start = Some(Point2::new(0.0, 0.0));
                }
                b.curves.push(CurveCmd::Circle { radius: r });
                b.closed = true;
            }
            (Value::Face(f), "addLoop") => {
                no_kwargs(name, &kw, span)?;
                for v in flatten(args) {
                    let Value::Loop(lp) = v else {
                        return Err(eval_err(format!("addLoop expects Loop, got {}", v.type_name()), span));
                    };
                    f.borrow_mut().loops.push(lp);
                }
            }
            (Value::Sketch(s), "addFace") => {
                no_kwargs(name, &kw, span)?;
                for v in flatten(args) {
                    let Value::Face(face) = v else {
                        return Err(eval_err(format!("addFace expects Face, got {}", v.type_name()), span));
                    };
                    s.borrow_mut().faces.push(face);
                }
            }
            (Value::Model(m), "addSE") => {
                let a = bind(name, args, kw, &[("sketch", false), ("extrude", false), ("boolean_op", true)], span)?;
                let Some(Value::Sketch(sketch)) = a[0].clone() else {
                    return Err(eval_err("addSE expects a Sketch as first argument", span));
                };
                let Some(Value::Extrude(extrude)) = a[1].clone() else {
                    return Err(eval_err("addSE expects an Extrude as second argument", span));
                };
                let op = match &a[2] {
                    None => BooleanOp::NewBody,
                    Some(Value::Str(s)) => BooleanOp::parse(s)
                        .ok_or_else(|| eval_err(format!("unknown boolean operation '{s}'"), span))?,
                    Some(other) => {
                        return Err(eval_err(format!("boolean_op must be a string, got {}", other.type_name()), span))
                    }
                };
                m.borrow_mut().pairs.push(PairB { sketch, extrude, op });
            }
            (Value::List(items), "append") => {
                let a = bind(name, args, kw, &[("item", false)], span)?;
                items.borrow_mut().push(a[0].clone().unwrap());
                return Ok(Value::None);
            }
            _ => return Err(eval_err(format!("'{}' object has no method '{name}'", recv.type_name()), span)),
        }
        Ok(recv)
    }
}

fn math_constant(name: &str) -> f64 {
    match name {
        "pi" => std::f64::consts::PI,
        "e" => std::f64::consts::E,
        _ => std::f64::consts::TAU,
    }
}

fn module_attr(name: &'static str) -> Value {
    if MATH_CONSTANTS.contains(&name) {
        Value::Num(math_constant(name))
    } else {
        Value::Func(name)
    }
}

fn finite(x: f64, span: Span) -> R<Value> {
    if x.is_finite() {
        Ok(Value::Num(x))
    } else if x.is_nan() {
        Err(eval_err("result is not a number", span))
    } else {
        Err(eval_err("numeric overflow", span))
    }
}

fn as_num(v: &Value) -> Option<f64> {
    match v {
        Value::Num(x) => Some(*x),
        Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        _ => None,
    }
}

fn as_int(v: &Value) -> Option<i64> {
    let x = as_num(v)?;
    (x.fract() == 0.0 && x.abs() < 9.0e15).then_some(x as i64)
}

fn num(v: &Value, span: Span) -> R<f64> {
    as_num(v).ok_or_else(|| eval_err(format!("expected a number, got {}", v.type_name()), span))
}

fn flag(v: &Value, span: Span) -> R<bool> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Num(x) => Ok(*x != 0.0),
        other => Err(eval_err(format!("expected True or False, got {}", other.type_name()), span)),
    }
}

fn seq(v: &Value) -> Option<Vec<Value>> {
    match v {
        Value::List(items) => Some(items.borrow().clone()),
        Value::Tuple(items) => Some(items.to_vec()),
        Value::Range { start, stop, step } => {
            Some((0..range_len(*start, *stop, *step)).map(|k| Value::Num((start + k * step) as f64)).collect())
        }
        _ => None,
    }
}

fn as_vec3(v: &Value, span: Span) -> R<Vec3> {
    let items = seq(v).ok_or_else(|| eval_err(format!("expected a 3-vector, got {}", v.type_name()), span))?;
    if items.len() != 3 {
        return Err(eval_err(format!("expected a 3-vector, got {} entries", items.len()), span));
    }
    Ok(Vec3::new(num(&items[0], span)?, num(&items[1], span)?, num(&items[2], span)?))
}

/// `addLoop(a, b)` and `addLoop([a, b])` are both accepted.
fn flatten(args: Vec<Value>) -> Vec<Value> {
    let mut out = Vec::new();
    for a in args {
        match &a {
            Value::List(_) | Value::Tuple(_) => out.extend(seq(&a).unwrap()),
            _ => out.push(a),
        }
    }
    out
}

fn no_kwargs(name: &str, kw: &[(&str, Value)], span: Span) -> R<()> {
    if let Some((k, _)) = kw.first() {
        return Err(eval_err(format!("{name}() got an unexpected keyword argument '{k}'"), span));
    }
    Ok(())
}

/// Matches positional and keyword arguments against `params` (name, optional).
fn bind(name: &str, args: Vec<Value>, kw: Vec<(&str, Value)>, params: &[(&str, bool)], span: Span) -> R<Vec<Option<Value>>> {
    if args.len() > params.len() {
        return Err(eval_err(format!("{name}() takes {} arguments, got {}", params.len(), args.len()), span));
    }
    let mut out: Vec<Option<Value>> = args.into_iter().map(Some).collect();
    out.resize(params.len(), None);
    for (k, v) in kw {
        let Some(i) = params.iter().position(|(p, _)| *p == k) else {
            return Err(eval_err(format!("{name}() got an unexpected keyword argument '{k}'"), span));
        };
        if out[i].is_some() {
            return Err(eval_err(format!("{name}() got multiple values for '{k}'"), span));
        }
        out[i] = Some(v);
    }
    for ((p, optional), v) in params.iter().zip(&out) {
        if !optional && v.is_none() {
            return Err(eval_err(format!("{name}() missing required argument '{p}'"), span));
        }
    }
    Ok(out)
}

fn build_loop(b: &LoopB) -> Loop {
    Loop { start: b.start.unwrap_or(Point2::new(0.0, 0.0)), curves: b.curves.clone(), closed: b.closed }
}

fn build_model(m: &ModelB) -> R<CADModel> {
    let mut pairs = Vec::with_capacity(m.pairs.len());
    for (i, p) in m.pairs.iter().enumerate() {
        let s = p.sketch.borrow();
        let mut faces = Vec::with_capacity(s.faces.len());
        for (j, f) in s.faces.iter().enumerate() {
            let f = f.borrow();
            let Some((outer, holes)) = f.loops.split_first() else {
                return Err(ScriptError::new(FailureCategory::Validation, format!("pairs[{i}].faces[{j}] has no loops")));
            };
            faces.push(Face {
                outer: build_loop(&outer.borrow()),
                holes: holes.iter().map(|h| build_loop(&h.borrow())).collect(),
            });
        }
        pairs.push(SEPair {
            sketch: Sketch { origin: s.origin, x_axis: s.x_axis, normal: s.normal, faces },
            extrude: p.extrude,
            op: p.op,
        });
    }
    Ok(CADModel { pairs })
}

/// Runs a parsed script and returns the validated model bound to `cad_model`.
pub fn execute(ast: &ScriptAst, limits: &ExecLimits) -> Result<CADModel, ScriptError> {
    let mut it = Interp::new(limits);
    it.block(&ast.statements)?;
    let model = match it.env.get("cad_model") {
        None => return Err(ScriptError::new(FailureCategory::Contract, "`cad_model` is not defined")),
        Some(Value::Model(m)) => build_model(&m.borrow())?,
        Some(other) => {
            return Err(ScriptError::new(
                FailureCategory::Contract,
                format!("`cad_model` must be a CADModel, found {}", other.type_name()),
            ))
        }
    };
    let report = validate_model(&model);
    if !report.is_valid() {
        return Err(ScriptError::new(FailureCategory::Validation, report.to_string()));
    }
    Ok(model)
}
