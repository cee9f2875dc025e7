// benchmark crate; see benches/
