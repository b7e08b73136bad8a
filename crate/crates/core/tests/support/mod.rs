pub mod instances;
pub mod oracle;
#[allow(dead_code)]
pub mod reference;
