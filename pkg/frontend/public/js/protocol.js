// Message shapes for the control API. The console never invents state:
// everything rendered comes from one of these server events.
export {};
