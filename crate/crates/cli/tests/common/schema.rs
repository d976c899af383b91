//! Shape validation for the published JSON interchange forms.

use serde_json::Value;

fn require_keys(value: &Value, keys: &[&str], context: &str) -> Result<(), String> {
    let object = value
        .as_object()
        .ok_or_else(|| format!("{context}: expected an object"))?;
    for key in keys {
        if !object.contains_key(*key) {
            return Err(format!("{context}: missing key `{key}`"));
        }
    }
    for key in object.keys() {
        if !keys.contains(&key.as_str()) {
            return Err(format!("{context}: unexpected key `{key}`"));
        }
    }
    Ok(())
}

fn check_bare_fact(value: &Value, context: &str) -> Result<(), String> {
    require_keys(value, &["relation", "source", "target"], context)?;
    for key in ["relation", "source", "target"] {
        if !value[key].is_string() {
            return Err(format!("{context}: `{key}` must be a string"));
        }
    }
    Ok(())
}

fn check_tuple(value: &Value, context: &str) -> Result<(), String> {
    require_keys(
        value,
        &["relation", "source", "target", "provenance"],
        context,
    )?;
    let provenance = value["provenance"]
        .as_str()
        .ok_or_else(|| format!("{context}: `provenance` must be a string"))?;
    if !["assigned", "inferred", "accepted"].contains(&provenance) {
        return Err(format!("{context}: bad provenance `{provenance}`"));
    }
    Ok(())
}

fn check_violation(value: &Value, context: &str) -> Result<(), String> {
    require_keys(value, &["constraintId", "binding", "involved"], context)?;
    if !value["constraintId"].is_string() {
        return Err(format!("{context}: `constraintId` must be a string"));
    }
    let binding = value["binding"]
        .as_object()
        .ok_or_else(|| format!("{context}: `binding` must be an object"))?;
    for (var, loc) in binding {
        if !loc.is_string() {
            return Err(format!("{context}: binding `{var}` must map to a string"));
        }
    }
    for (index, fact) in value["involved"]
        .as_array()
        .ok_or_else(|| format!("{context}: `involved` must be an array"))?
        .iter()
        .enumerate()
    {
        check_bare_fact(fact, &format!("{context}.involved[{index}]"))?;
    }
    Ok(())
}

/// Validate a rendered analysis report against the published schema.
pub fn check_report_json(text: &str) -> Result<(), String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    require_keys(
        &value,
        &["stats", "assigned", "inferred", "violations", "diagnoses"],
        "report",
    )?;
    require_keys(
        &value["stats"],
        &["assigned", "inferred", "violations"],
        "report.stats",
    )?;
    for key in ["assigned", "inferred", "violations"] {
        if !value["stats"][key].is_u64() {
            return Err(format!("report.stats.{key}: expected a count"));
        }
    }

    let arrays = [
        ("assigned", &value["assigned"]),
        ("inferred", &value["inferred"]),
        ("violations", &value["violations"]),
        ("diagnoses", &value["diagnoses"]),
    ];
    for (name, array) in arrays {
        if !array.is_array() {
            return Err(format!("report.{name}: expected an array"));
        }
    }

    for (index, tuple) in value["assigned"].as_array().unwrap().iter().enumerate() {
        check_tuple(tuple, &format!("report.assigned[{index}]"))?;
    }
    for (index, entry) in value["inferred"].as_array().unwrap().iter().enumerate() {
        let context = format!("report.inferred[{index}]");
        require_keys(
            entry,
            &["relation", "source", "target", "provenance", "derivation"],
            &context,
        )?;
        if entry["provenance"] != "inferred" {
            return Err(format!("{context}: provenance must be `inferred`"));
        }
        let derivation = &entry["derivation"];
        require_keys(derivation, &["ruleId", "premises"], &format!("{context}.derivation"))?;
        if !derivation["ruleId"].is_string() {
            return Err(format!("{context}.derivation.ruleId: expected a string"));
        }
        for (p, fact) in derivation["premises"]
            .as_array()
            .ok_or_else(|| format!("{context}.derivation.premises: expected an array"))?
            .iter()
            .enumerate()
        {
            check_bare_fact(fact, &format!("{context}.derivation.premises[{p}]"))?;
        }
    }
    for (index, violation) in value["violations"].as_array().unwrap().iter().enumerate() {
        check_violation(violation, &format!("report.violations[{index}]"))?;
    }
    for (index, diagnosis) in value["diagnoses"].as_array().unwrap().iter().enumerate() {
        let context = format!("report.diagnoses[{index}]");
        require_keys(diagnosis, &["violation", "support"], &context)?;
        check_violation(&diagnosis["violation"], &format!("{context}.violation"))?;
        for (s, fact) in diagnosis["support"]
            .as_array()
            .ok_or_else(|| format!("{context}.support: expected an array"))?
            .iter()
            .enumerate()
        {
            check_bare_fact(fact, &format!("{context}.support[{s}]"))?;
        }
    }
    Ok(())
}

/// Validate a serialized model against the published model schema.
pub fn check_model_json(text: &str) -> Result<(), String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    require_keys(&value, &["name", "locations", "tuples"], "model")?;
    if !value["name"].is_string() {
        return Err("model.name: expected a string".into());
    }
    for (index, location) in value["locations"]
        .as_array()
        .ok_or("model.locations: expected an array")?
        .iter()
        .enumerate()
    {
        let context = format!("model.locations[{index}]");
        let object = location
            .as_object()
            .ok_or_else(|| format!("{context}: expected an object"))?;
        for key in ["id", "type", "kind", "resource"] {
            if !object.get(key).map(Value::is_string).unwrap_or(false) {
                return Err(format!("{context}: `{key}` must be a string"));
            }
        }
        let kind = object["kind"].as_str().unwrap();
        if !["text", "code", "model"].contains(&kind) {
            return Err(format!("{context}: bad kind `{kind}`"));
        }
        for key in object.keys() {
            if !["id", "type", "kind", "resource", "offset", "length", "element"]
                .contains(&key.as_str())
            {
                return Err(format!("{context}: unexpected key `{key}`"));
            }
        }
    }
    for (index, tuple) in value["tuples"]
        .as_array()
        .ok_or("model.tuples: expected an array")?
        .iter()
        .enumerate()
    {
        check_tuple(tuple, &format!("model.tuples[{index}]"))?;
    }
    Ok(())
}
