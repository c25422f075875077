//! JSON-LD representations with embedded hypermedia controls.
//!
//! Documents follow a constrained JSON-LD profile: one inline `@context`
//! object, `prefix:term` compaction, no nested graphs. A document carries
//! domain properties plus a `links` array and a `forms` array:
//!
//! ```json
//! {
//!   "@context": { "@vocab": "https://www.w3.org/2019/wot/hypermedia#", "htv": "...", "wot": "..." },
//!   "links": [ { "href": "http://ttt.api/", "htv:methodName": "GET" } ],
//!   "forms": [ { "href": "http://ttt.api/Square11?id=id1234", "contentType": "application/json",
//!                "htv:methodName": "PUT", "wot:op": "writeproperty", "fields": ["@id"] } ]
//! }
//! ```
//!
//! Forms name their required body fields under `fields` so that a client can
//! build the request body without out-of-band knowledge.

mod view;

pub use view::{GameOutcome, GameView, ViewError};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};
use url::Url;

use crate::vocab::{hctl, htv, wot, ContextDefinition, HCTL_NS, HTV_NS, WOT_NS};

pub const JSON: &str = "application/json";
pub const JSON_LD: &str = "application/ld+json";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HypermediaError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("term {0:?} is not registered in the document context")]
    UnregisteredTerm(String),
}

fn malformed(msg: impl Into<String>) -> HypermediaError {
    HypermediaError::MalformedDocument(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Get,
    Post,
    Put,
    Delete,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Put => "PUT",
            Method::Delete => "DELETE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HypermediaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "GET" => Ok(Method::Get),
            "POST" => Ok(Method::Post),
            "PUT" => Ok(Method::Put),
            "DELETE" => Ok(Method::Delete),
            other => Err(malformed(format!("unsupported method {other:?}"))),
        }
    }
}

/// A safe navigation: always `GET`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub href: String,
    pub method: Method,
    /// Expanded IRI of the relation type, when the link needs one to be told apart.
    pub rel: Option<String>,
}

impl Link {
    pub fn new(href: impl Into<String>) -> Self {
        Link {
            href: href.into(),
            method: Method::Get,
            rel: None,
        }
    }

    pub fn with_rel(mut self, rel: impl Into<String>) -> Self {
        self.rel = Some(rel.into());
        self
    }
}

/// A state-changing operation descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Form {
    pub href: String,
    pub content_type: String,
    pub method: Method,
    /// Expanded IRI of the operation type, e.g. the Thing Description `writeproperty`.
    pub operation: Option<String>,
    pub required_fields: Vec<String>,
}

impl Form {
    pub fn new(href: impl Into<String>, method: Method) -> Self {
        Form {
            href: href.into(),
            content_type: JSON.to_string(),
            method,
            operation: None,
            required_fields: Vec::new(),
        }
    }

    pub fn with_operation(mut self, operation: impl Into<String>) -> Self {
        self.operation = Some(operation.into());
        self
    }

    pub fn with_fields<I, S>(mut self, fields: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.required_fields = fields.into_iter().map(Into::into).collect();
        self
    }
}

/// What an agent learns from one form: where, how, and with which fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormAction {
    pub href: String,
    pub method: Method,
    pub required_fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropertyValue {
    Iri(String),
    Text(String),
    Integer(i64),
    Number(f64),
    Boolean(bool),
    /// Anything outside the scalar profile, preserved as-is.
    Json(Value),
}

impl PropertyValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            PropertyValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            PropertyValue::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            PropertyValue::Number(n) => Some(*n),
            PropertyValue::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn to_json(&self) -> Result<Value, HypermediaError> {
        Ok(match self {
            PropertyValue::Iri(iri) => {
                let mut map = Map::new();
                map.insert("@id".into(), Value::String(iri.clone()));
                Value::Object(map)
            }
            PropertyValue::Text(s) => Value::String(s.clone()),
            PropertyValue::Integer(i) => Value::from(*i),
            PropertyValue::Number(n) => serde_json::Number::from_f64(*n)
                .map(Value::Number)
                .ok_or_else(|| malformed(format!("non-finite number {n}")))?,
            PropertyValue::Boolean(b) => Value::Bool(*b),
            PropertyValue::Json(v) => v.clone(),
        })
    }

    fn from_json(value: &Value, ctx: &ContextDefinition) -> PropertyValue {
        match value {
            Value::String(s) => PropertyValue::Text(s.clone()),
            Value::Bool(b) => PropertyValue::Boolean(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => PropertyValue::Integer(i),
                _ => PropertyValue::Number(n.as_f64().unwrap_or(f64::NAN)),
            },
            Value::Object(obj) if obj.len() == 1 => match obj.get("@id") {
                Some(Value::String(id)) => PropertyValue::Iri(ctx.expand_lenient(id)),
                _ => PropertyValue::Json(value.clone()),
            },
            other => PropertyValue::Json(other.clone()),
        }
    }
}

/// A resource state: data plus the controls valid from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    /// The resource this document describes (`@id`).
    pub id: Option<String>,
    pub context: ContextDefinition,
    /// Domain properties keyed by expanded IRI.
    pub properties: BTreeMap<String, PropertyValue>,
    pub links: Vec<Link>,
    pub forms: Vec<Form>,
}

const RESERVED_KEYS: [&str; 4] = [hctl::LINKS, hctl::FORMS, "@context", "@id"];

impl Representation {
    pub fn new(context: ContextDefinition) -> Self {
        Representation {
            id: None,
            context,
            properties: BTreeMap::new(),
            links: Vec::new(),
            forms: Vec::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn property(&self, iri: &str) -> Option<&PropertyValue> {
        self.properties.get(iri)
    }

    pub fn set(&mut self, iri: impl Into<String>, value: PropertyValue) {
        self.properties.insert(iri.into(), value);
    }

    /// One `(href, method, required fields)` tuple per form, in document order.
    pub fn form_actions(&self) -> Vec<FormAction> {
        self.forms
            .iter()
            .map(|f| FormAction {
                href: f.href.clone(),
                method: f.method,
                required_fields: f.required_fields.clone(),
            })
            .collect()
    }

    /// The first link carrying relation `rel` (expanded IRI).
    pub fn link_with_rel(&self, rel: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.rel.as_deref() == Some(rel))
    }

    /// Compact JSON-LD text. Key order is fixed, so equal representations
    /// serialize to identical bytes.
    pub fn serialize(&self) -> Result<String, HypermediaError> {
        let value = self.to_json()?;
        Ok(serde_json::to_string_pretty(&value).expect("JSON values serialize"))
    }

    pub fn to_json(&self) -> Result<Value, HypermediaError> {
        let ctx = &self.context;
        let mut doc = Map::new();
        doc.insert("@context".into(), ctx.to_json());
        if let Some(id) = &self.id {
            doc.insert("@id".into(), Value::String(id.clone()));
        }
        for (iri, value) in &self.properties {
            let key = ctx
                .compact(iri)
                .filter(|k| !RESERVED_KEYS.contains(&k.as_str()))
                .ok_or_else(|| HypermediaError::UnregisteredTerm(iri.clone()))?;
            doc.insert(key, value.to_json()?);
        }
        let method_key = key_for(ctx, HTV_NS, htv::METHOD_NAME);
        let links = self
            .links
            .iter()
            .map(|link| {
                let mut obj = Map::new();
                obj.insert(hctl::HREF.into(), Value::String(link.href.clone()));
                obj.insert(method_key.clone(), Value::String(link.method.to_string()));
                if let Some(rel) = &link.rel {
                    obj.insert(hctl::REL.into(), Value::String(compact_value(ctx, rel)?));
                }
                Ok(Value::Object(obj))
            })
            .collect::<Result<Vec<_>, HypermediaError>>()?;
        doc.insert(hctl::LINKS.into(), Value::Array(links));
        let op_key = key_for(ctx, WOT_NS, wot::OP);
        let forms = self
            .forms
            .iter()
            .map(|form| {
                let mut obj = Map::new();
                obj.insert(hctl::HREF.into(), Value::String(form.href.clone()));
                obj.insert(hctl::CONTENT_TYPE.into(), Value::String(form.content_type.clone()));
                obj.insert(method_key.clone(), Value::String(form.method.to_string()));
                if let Some(op) = &form.operation {
                    let op = match op.strip_prefix(WOT_NS) {
                        Some(local) => local.to_string(),
                        None => compact_value(ctx, op)?,
                    };
                    obj.insert(op_key.clone(), Value::String(op));
                }
                obj.insert(
                    hctl::FIELDS.into(),
                    Value::Array(form.required_fields.iter().cloned().map(Value::String).collect()),
                );
                Ok(Value::Object(obj))
            })
            .collect::<Result<Vec<_>, HypermediaError>>()?;
        doc.insert(hctl::FORMS.into(), Value::Array(forms));
        Ok(Value::Object(doc))
    }

    /// Parses a document using its inline `@context`, or the hypermedia
    /// defaults when it has none. Relative hrefs resolve against `base`.
    pub fn parse(text: &str, base: &str) -> Result<Self, HypermediaError> {
        Self::parse_with_context(text, base, &default_context())
    }

    pub fn parse_with_context(text: &str, base: &str, fallback: &ContextDefinition) -> Result<Self, HypermediaError> {
        let value: Value = serde_json::from_str(text).map_err(|e| malformed(format!("not JSON: {e}")))?;
        Self::from_json(&value, base, fallback)
    }

    pub fn from_json(value: &Value, base: &str, fallback: &ContextDefinition) -> Result<Self, HypermediaError> {
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("top level is not an object"))?;
        let context = match obj.get("@context") {
            Some(ctx @ Value::Object(_)) => ContextDefinition::from_json(ctx).map_err(|e| malformed(e.to_string()))?,
            _ => fallback.clone(),
        };
        let base_url = Url::parse(base).ok();
        let mut rep = Representation::new(context);
        let links_iri = format!("{HCTL_NS}{}", hctl::LINKS);
        let forms_iri = format!("{HCTL_NS}{}", hctl::FORMS);
        for (key, val) in obj {
            match key.as_str() {
                "@context" => {}
                "@id" => {
                    let id = val.as_str().ok_or_else(|| malformed("@id is not a string"))?;
                    rep.id = Some(resolve(base_url.as_ref(), id)?);
                }
                _ => {
                    let iri = rep.context.expand_lenient(key);
                    if iri == links_iri {
                        rep.links = array(val, "links")?
                            .iter()
                            .map(|l| parse_link(l, &rep.context, base_url.as_ref()))
                            .collect::<Result<_, _>>()?;
                    } else if iri == forms_iri {
                        rep.forms = array(val, "forms")?
                            .iter()
                            .map(|f| parse_form(f, &rep.context, base_url.as_ref()))
                            .collect::<Result<_, _>>()?;
                    } else {
                        let value = PropertyValue::from_json(val, &rep.context);
                        rep.properties.insert(iri, value);
                    }
                }
            }
        }
        Ok(rep)
    }
}

/// Hypermedia controls as default vocabulary with `htv` and `wot` prefixes.
pub fn default_context() -> ContextDefinition {
    ContextDefinition::new(HCTL_NS)
        .with_prefix("htv", HTV_NS)
        .with_prefix("wot", WOT_NS)
}

fn key_for(ctx: &ContextDefinition, ns: &str, local: &str) -> String {
    let iri = format!("{ns}{local}");
    ctx.compact(&iri).unwrap_or(iri)
}

fn compact_value(ctx: &ContextDefinition, iri: &str) -> Result<String, HypermediaError> {
    ctx.compact(iri)
        .ok_or_else(|| HypermediaError::UnregisteredTerm(iri.to_string()))
}

fn array<'a>(value: &'a Value, what: &str) -> Result<&'a Vec<Value>, HypermediaError> {
    value
        .as_array()
        .ok_or_else(|| malformed(format!("{what} is not an array")))
}

fn resolve(base: Option<&Url>, href: &str) -> Result<String, HypermediaError> {
    if Url::parse(href).is_ok() {
        return Ok(href.to_string());
    }
    let base = base.ok_or_else(|| malformed(format!("relative href {href:?} without a base")))?;
    base.join(href)
        .map(String::from)
        .map_err(|e| malformed(format!("bad href {href:?}: {e}")))
}

/// Looks up a control key by expanded IRI.
fn control_field<'a>(obj: &'a Map<String, Value>, ctx: &ContextDefinition, ns: &str, local: &str) -> Option<&'a Value> {
    let target = format!("{ns}{local}");
    obj.iter()
        .find(|(k, _)| ctx.expand_lenient(k) == target)
        .map(|(_, v)| v)
}

fn required_str<'a>(
    obj: &'a Map<String, Value>,
    ctx: &ContextDefinition,
    ns: &str,
    local: &str,
    what: &str,
) -> Result<&'a str, HypermediaError> {
    control_field(obj, ctx, ns, local)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("{what} entry without {local}")))
}

fn parse_link(value: &Value, ctx: &ContextDefinition, base: Option<&Url>) -> Result<Link, HypermediaError> {
    let obj = value.as_object().ok_or_else(|| malformed("link is not an object"))?;
    let href = required_str(obj, ctx, HCTL_NS, hctl::HREF, "link")?;
    let method: Method = required_str(obj, ctx, HTV_NS, htv::METHOD_NAME, "link")?.parse()?;
    if method != Method::Get {
        return Err(malformed(format!("link with unsafe method {method}")));
    }
    let rel = control_field(obj, ctx, HCTL_NS, hctl::REL)
        .and_then(Value::as_str)
        .map(|r| ctx.expand_lenient(r));
    Ok(Link {
        href: resolve(base, href)?,
        method,
        rel,
    })
}

fn parse_form(value: &Value, ctx: &ContextDefinition, base: Option<&Url>) -> Result<Form, HypermediaError> {
    let obj = value.as_object().ok_or_else(|| malformed("form is not an object"))?;
    let href = required_str(obj, ctx, HCTL_NS, hctl::HREF, "form")?;
    let method: Method = required_str(obj, ctx, HTV_NS, htv::METHOD_NAME, "form")?.parse()?;
    let content_type = control_field(obj, ctx, HCTL_NS, hctl::CONTENT_TYPE)
        .and_then(Value::as_str)
        .unwrap_or(JSON)
        .to_string();
    let operation = control_field(obj, ctx, WOT_NS, wot::OP)
        .and_then(Value::as_str)
        .map(|op| {
            if op.contains(':') {
                ctx.expand_lenient(op)
            } else {
                format!("{WOT_NS}{op}")
            }
        });
    let required_fields = match control_field(obj, ctx, HCTL_NS, hctl::FIELDS) {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|f| {
                f.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| malformed("form field name is not a string"))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(malformed("form fields is not an array")),
    };
    Ok(Form {
        href: resolve(base, href)?,
        content_type,
        method,
        operation,
        required_fields,
    })
}
