//! Builtins with observable effects and the ordered log they write to.

use std::fmt;

use crate::ast::Builtin;
use crate::eval_base::{ErrorKind, EvalResult, Machine, RuntimeError, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EffectKind {
    Print,
    WidgetCreate,
    WidgetConfigure,
    WidgetToggle,
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectKind::Print => "print",
            EffectKind::WidgetCreate => "widget-create",
            EffectKind::WidgetConfigure => "widget-configure",
            EffectKind::WidgetToggle => "widget-toggle",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectEvent {
    pub seq: u64,
    pub kind: EffectKind,
    pub payload: String,
}

impl EffectEvent {
    pub fn serialize(&self) -> String {
        format!("{}\t{}\t{}", self.seq, self.kind, self.payload)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogEntry {
    Effect(EffectEvent),
    /// Diagnostic lines requested by flags, kept in order with the effects.
    Note(String),
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    entries: Vec<LogEntry>,
    next_seq: u64,
}

impl Trace {
    pub fn emit(&mut self, kind: EffectKind, payload: String) {
        self.next_seq += 1;
        self.entries.push(LogEntry::Effect(EffectEvent { seq: self.next_seq, kind, payload }));
    }

    pub fn note(&mut self, text: String) {
        self.entries.push(LogEntry::Note(text));
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn events(&self) -> impl Iterator<Item = &EffectEvent> {
        self.entries.iter().filter_map(|e| match e {
            LogEntry::Effect(ev) => Some(ev),
            LogEntry::Note(_) => None,
        })
    }

    /// Payloads of print events in order.
    pub fn prints(&self) -> Vec<String> {
        self.events().filter(|e| e.kind == EffectKind::Print).map(|e| e.payload.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidgetKind {
    Form,
    FormMenu,
    MenuItem,
}

impl fmt::Display for WidgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WidgetKind::Form => "form",
            WidgetKind::FormMenu => "formMenu",
            WidgetKind::MenuItem => "menuItem",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WidgetHandle {
    pub kind: WidgetKind,
    pub id: usize,
    pub label: String,
}

impl fmt::Display for WidgetHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind, self.id)
    }
}

#[derive(Clone, Debug)]
struct WidgetState {
    active: bool,
    action: Option<Value>,
    running: bool,
}

/// Reference cells and widgets of one run.
#[derive(Clone, Debug, Default)]
pub struct Store {
    cells: Vec<Value>,
    widgets: Vec<WidgetState>,
}

impl Store {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn widget_active(&self, id: usize) -> Option<bool> {
        self.widgets.get(id.checked_sub(1)?).map(|w| w.active)
    }
}

fn type_error(detail: String) -> RuntimeError {
    RuntimeError::new(ErrorKind::CoreTypeError, detail)
}

fn cell(b: Builtin, v: &Value) -> EvalResult<usize> {
    match v {
        Value::Ref(i) => Ok(*i),
        v => Err(type_error(format!("{} expects a ref, got {v}", b.name()))),
    }
}

fn string(b: Builtin, v: &Value) -> EvalResult<String> {
    match v {
        Value::Str(s) => Ok(s.clone()),
        v => Err(type_error(format!("{} expects a string, got {v}", b.name()))),
    }
}

fn widget(b: Builtin, v: &Value, kind: WidgetKind) -> EvalResult<WidgetHandle> {
    match v {
        Value::Widget(w) if w.kind == kind => Ok(w.clone()),
        v => Err(type_error(format!("{} expects a {kind}, got {v}", b.name()))),
    }
}

fn widgets(b: Builtin, v: &Value, kind: WidgetKind) -> EvalResult<Vec<WidgetHandle>> {
    match v {
        Value::List(items) => items.iter().map(|i| widget(b, i, kind)).collect(),
        v => Err(type_error(format!("{} expects a {kind} list, got {v}", b.name()))),
    }
}

fn ids(ws: &[WidgetHandle]) -> String {
    let ids: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
    format!("[{}]", ids.join("; "))
}

impl Machine {
    pub(crate) fn apply_builtin(&mut self, b: Builtin, args: Vec<Value>) -> EvalResult {
        let mut args = args.into_iter();
        let mut arg = || args.next().expect("parser checks builtin arity");
        match b {
            Builtin::Print => {
                let v = arg();
                self.trace.emit(EffectKind::Print, v.render_print());
                Ok(v)
            }
            Builtin::Ref => {
                self.store.cells.push(arg());
                Ok(Value::Ref(self.store.cells.len() - 1))
            }
            Builtin::Deref => {
                let i = cell(b, &arg())?;
                Ok(self.store.cells[i].clone())
            }
            Builtin::Assign => {
                let i = cell(b, &arg())?;
                self.store.cells[i] = arg();
                Ok(Value::Unit)
            }
            Builtin::Incr => {
                let i = cell(b, &arg())?;
                match &self.store.cells[i] {
                    Value::Int(n) => {
                        let n = n.checked_add(1).ok_or_else(|| type_error("integer overflow".into()))?;
                        self.store.cells[i] = Value::Int(n);
                        Ok(Value::Unit)
                    }
                    v => Err(type_error(format!("incr on a ref holding {v}"))),
                }
            }
            Builtin::CreateForm => self.create_widget(b, WidgetKind::Form, arg()),
            Builtin::CreateMenu => self.create_widget(b, WidgetKind::FormMenu, arg()),
            Builtin::CreateMenuItem => self.create_widget(b, WidgetKind::MenuItem, arg()),
            Builtin::SetMenus => {
                let form = widget(b, &arg(), WidgetKind::Form)?;
                let menus = widgets(b, &arg(), WidgetKind::FormMenu)?;
                self.trace.emit(EffectKind::WidgetConfigure, format!("setMenus {form} {}", ids(&menus)));
                Ok(Value::Unit)
            }
            Builtin::SetMenuItems => {
                let menu = widget(b, &arg(), WidgetKind::FormMenu)?;
                let items = widgets(b, &arg(), WidgetKind::MenuItem)?;
                self.trace
                    .emit(EffectKind::WidgetConfigure, format!("setMenuItems {menu} {}", ids(&items)));
                Ok(Value::Unit)
            }
            Builtin::SetAction => {
                let item = widget(b, &arg(), WidgetKind::MenuItem)?;
                let action = arg();
                if !matches!(action, Value::Closure { .. }) {
                    return Err(type_error(format!("setAction expects a function, got {action}")));
                }
                self.store.widgets[item.id - 1].action = Some(action);
                self.trace.emit(EffectKind::WidgetConfigure, format!("setAction {item}"));
                Ok(Value::Unit)
            }
            Builtin::Toggle => {
                let item = widget(b, &arg(), WidgetKind::MenuItem)?;
                let state = &mut self.store.widgets[item.id - 1];
                state.active = !state.active;
                let on = if state.active { "on" } else { "off" };
                let action = if state.running { None } else { state.action.clone() };
                self.trace.emit(EffectKind::WidgetToggle, format!("{item} {on}"));
                if let Some(f) = action {
                    self.store.widgets[item.id - 1].running = true;
                    let r = self.apply(f, Value::Unit);
                    self.store.widgets[item.id - 1].running = false;
                    r?;
                }
                Ok(Value::Unit)
            }
        }
    }

    fn create_widget(&mut self, b: Builtin, kind: WidgetKind, label: Value) -> EvalResult {
        let label = string(b, &label)?;
        let handle = WidgetHandle { kind, id: self.store.widgets.len() + 1, label };
        self.trace.emit(EffectKind::WidgetCreate, format!("{handle} {:?}", handle.label));
        self.store.widgets.push(WidgetState {
            active: false,
            action: None,
            running: false,
        });
        Ok(Value::Widget(handle))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval_base::{Mode, Variant};
    use crate::parser::parse_expr;

    fn run(src: &str) -> (EvalResult, Machine) {
        let mut m = Machine::new(Mode::Base(Variant::Lazy));
        let r = m.eval(&parse_expr(src).unwrap());
        (r, m)
    }

    #[test]
    fn print_returns_its_argument() {
        let (r, m) = run("print 1");
        assert!(matches!(r, Ok(Value::Int(1))));
        let (r, m2) = run("print (1 + 2)");
        assert!(matches!(r, Ok(Value::Int(3))));
        assert_eq!(m2.trace.prints(), vec!["3"]);
        let (r, m3) = run(r#"print "ok""#);
        assert!(matches!(r, Ok(Value::Str(ref s)) if s == "ok"));
        assert_eq!(m3.trace.prints(), vec!["ok"]);
        assert_eq!(m.trace.events().next().unwrap().serialize(), "1\tprint\t1");
    }

    #[test]
    fn reference_cells() {
        assert!(matches!(run("let c = ref (-1) in incr c; !c").0, Ok(Value::Int(0))));
        assert!(matches!(run("let c = ref 1 in c := 5; !c").0, Ok(Value::Int(5))));
        assert!(matches!(
            run("let a = ref 1 in let b = ref 1 in incr a; !b").0,
            Ok(Value::Int(1))
        ));
        assert_eq!(run("!3").0.unwrap_err().kind, ErrorKind::CoreTypeError);
        assert_eq!(run(r#"incr (ref "s")"#).0.unwrap_err().kind, ErrorKind::CoreTypeError);
    }

    #[test]
    fn widgets_log_and_dispatch() {
        let (r, m) = run(
            r#"let f = createForm "Form" in
               let menu = createMenu "Menu" in
               let i1 = createMenuItem "Rice" in
               let i2 = createMenuItem "Grape" in
               setMenus(f, [menu]); setMenuItems(menu, [i1; i2]);
               setAction(i1, fun () -> toggle i2);
               setAction(i2, fun () -> toggle i1);
               toggle i1"#,
        );
        r.unwrap();
        let lines: Vec<String> = m.trace.events().map(|e| e.serialize()).collect();
        assert_eq!(lines[0], "1\twidget-create\tform#1 \"Form\"");
        assert_eq!(lines[4], "5\twidget-configure\tsetMenus form#1 [formMenu#2]");
        assert_eq!(&lines[8..], ["9\twidget-toggle\tmenuItem#3 on", "10\twidget-toggle\tmenuItem#4 on", "11\twidget-toggle\tmenuItem#3 off"]);
        assert_eq!(m.store.widget_active(3), Some(false));
        assert_eq!(m.store.widget_active(4), Some(true));
    }

    #[test]
    fn widget_kinds_are_checked() {
        let (r, _) = run(r#"setMenus(createForm "f", [createForm "g"])"#);
        assert_eq!(r.unwrap_err().kind, ErrorKind::CoreTypeError);
    }

    #[test]
    fn sequence_numbers_increase() {
        let (_, m) = run("print 1; print 2; print 3");
        let seqs: Vec<u64> = m.trace.events().map(|e| e.seq).collect();
        assert_eq!(seqs, vec![1, 2, 3]);
    }
}
