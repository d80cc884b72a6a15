// Thin wrapper over the control channel. Every user action maps to exactly
// one outgoing message; incoming events are parsed and handed to listeners.
export class ConsoleClient {
    constructor(socket) {
        this.socket = socket;
        this.listeners = [];
        socket.addEventListener('message', (event) => {
            let parsed;
            try {
                parsed = JSON.parse(String(event.data));
            }
            catch {
                return;
            }
            this.listeners.forEach((listener) => listener(parsed));
        });
    }
    onEvent(listener) {
        this.listeners.push(listener);
    }
    send(command) {
        this.socket.send(JSON.stringify(command));
    }
    close() {
        this.socket.close();
    }
    listDevices() {
        this.send({ type: 'list_devices' });
    }
    startMitm(target) {
        this.send(target === undefined ? { type: 'start_mitm' } : { type: 'start_mitm', target });
    }
    stopMitm() {
        this.send({ type: 'stop_mitm' });
    }
    setRules(rules) {
        this.send({ type: 'set_rules', rules });
    }
    setManual(on) {
        this.send({ type: 'set_manual', on });
    }
    decide(opId, action, bytesHex) {
        const command = { type: 'decision', op_id: opId, action };
        if (bytesHex !== undefined)
            command.bytes_hex = bytesHex;
        this.send(command);
    }
    replay(opId) {
        this.send({ type: 'replay', op_id: opId });
    }
}
